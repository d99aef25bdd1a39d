"""Command-line interface: ``glottcc synth | decompose | sweep | bench | analyze``.

Exit codes: 0 success, 1 usage error, 2 input format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, io
from .cepstrum import DEFAULT_NFFT
from .errors import FormatError, NumericalError, ParameterError
from .lf import LFParams, VOWELS, synthesize, vocal_tract
from .metrics import COG_THRESHOLD_HZ
from .signal import SampleBuffer

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERICAL = 0, 1, 2, 3
PEAK_LEVEL = 0.9

log = logging.getLogger("glottcc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_analysis_flags(p):
    p.add_argument("--backend", choices=experiments.BACKENDS, default="cc")
    p.add_argument("--alpha", type=float, default=0.7, help="window shape in [0.7, 1] (default 0.7)")
    p.add_argument("--periods", type=float, default=2.0, help="window length in pitch periods (default 2)")
    p.add_argument("--nfft", type=int, default=DEFAULT_NFFT, help="FFT size of the cepstrum backend (default 4096)")
    p.add_argument("--cog-threshold", type=float, default=COG_THRESHOLD_HZ, help="validity threshold in Hz")
    p.add_argument("--gci-shift-ms", type=float, default=0.0, help="delay added to every GCI annotation")
    p.add_argument("--gci-unit", choices=io.GCI_UNITS, default=None, help="override the GCI unit guess")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glottcc", description="Glottal source estimation by causal-anticausal decomposition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="synthesise an LF-driven vowel with ground truth")
    p.add_argument("--f0", type=float, default=100.0)
    p.add_argument("--oq", type=float, default=0.6)
    p.add_argument("--am", type=float, default=0.75)
    p.add_argument("--vowel", choices=VOWELS, default="a")
    p.add_argument("--n-periods", type=int, default=20)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--out", type=Path, required=True, help="output prefix; writes PREFIX.wav, PREFIX.gci, PREFIX_truth.wav")

    p = sub.add_parser("decompose", help="decompose every GCI-centred frame of one file")
    p.add_argument("wav", type=Path)
    p.add_argument("gci", type=Path)
    p.add_argument("--pitch", type=Path)
    _add_analysis_flags(p)
    p.add_argument("--out", type=Path, required=True, help="features CSV")
    p.add_argument("--waveforms", type=Path, help="long-format CSV of the anticausal estimates")

    p = sub.add_parser("sweep", help="synthetic windowing studies")
    p.add_argument("--figure", choices=("window", "offset", "agreement"), default="window")
    p.add_argument("--backend", choices=experiments.BACKENDS, default="cc")
    p.add_argument("--decimate", type=int, default=4, help="keep 1/N of the grid, a fixed pseudo-random subset (default 4)")
    p.add_argument("--alpha", type=float, default=0.7, help="window shape for the offset/agreement studies")
    p.add_argument("--periods", type=float, default=2.0, help="window length for the offset/agreement studies")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="CSV of the sweep cells")
    p.add_argument("--json", type=Path, help="optional JSON with the same content")

    p = sub.add_parser("bench", help="per-frame timing of both backends")
    p.add_argument("--repetitions", type=int, default=30)
    p.add_argument("--pitches", type=float, nargs="+", default=[60.0, 180.0])
    p.add_argument("--out", type=Path, help="JSON results")

    p = sub.add_parser("analyze", help="corpus feature analysis")
    p.add_argument("manifest", type=Path, help="text file with 'WAV GCI [PITCH]' per line, paths relative to it")
    _add_analysis_flags(p)
    p.add_argument("--out", type=Path, required=True, help="features CSV")
    p.add_argument("--summary", type=Path, help="JSON with histograms, validity and the error report")
    return parser


def _cmd_synth(args) -> int:
    params = LFParams(args.f0, args.oq, args.am)
    utt = synthesize(params, vocal_tract(args.vowel, args.sample_rate), args.n_periods, args.sample_rate)

    def scaled(buf):
        return SampleBuffer(buf.samples * (PEAK_LEVEL / np.max(np.abs(buf.samples))), buf.sample_rate)

    prefix = args.out
    prefix.parent.mkdir(parents=True, exist_ok=True)
    io.write_wav(prefix.with_suffix(".wav"), scaled(utt.speech), args.encoding)
    io.write_wav(prefix.parent / f"{prefix.name}_truth.wav", scaled(utt.glottal_derivative_truth), args.encoding)
    io.write_gci(prefix.with_suffix(".gci"), utt.gci_samples)
    print(f"wrote {prefix}.wav, {prefix}.gci and {prefix}_truth.wav ({len(utt.gci_samples)} GCIs)")
    return EXIT_OK


def _check_analysis_args(args):
    if args.nfft < 4 or args.nfft & (args.nfft - 1):
        raise ParameterError(f"--nfft must be a power of two, got {args.nfft}")


def _nfft(args):
    # the default grows with long frames; an explicit size is used as given
    if args.backend != "cc" or args.nfft == DEFAULT_NFFT:
        return None
    return args.nfft


def _cmd_decompose(args) -> int:
    _check_analysis_args(args)
    signal, gcis, f0 = experiments.load_annotations(args.wav, args.gci, args.pitch, args.gci_unit, args.gci_shift_ms)
    frames = experiments.analyse_signal(
        signal, gcis, f0, args.backend, args.alpha, args.periods, _nfft(args), args.cog_threshold
    )
    name = args.wav.name
    io.write_csv(args.out, experiments.frame_rows(name, frames), experiments.FEATURE_COLUMNS, "features")
    if args.waveforms:
        io.write_csv(args.waveforms, experiments.waveform_rows(name, frames), experiments.WAVEFORM_COLUMNS, "waveforms")
    for fa in frames:
        if fa.status in (experiments.EDGE, experiments.FAILED):
            log.warning("GCI %d: %s, %s", fa.gci_sample, fa.status, fa.message)
    n_ok = sum(fa.status == experiments.OK for fa in frames)
    print(f"{n_ok} of {len(frames)} frames decomposed; features in {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    grid = experiments.decimated_grid(step=args.decimate)
    if args.figure == "window":
        result = experiments.sweep_window(grid=grid, backend=args.backend, workers=args.workers)
        rows = result.rows()
        columns = ["alpha", "length", "rate", "mean_sd", "inverse_sd", "count"]
        payload = result.to_json_dict()
    elif args.figure == "offset":
        offsets = np.arange(-24, 25, 2)
        result = experiments.sweep_gci_offset(offsets, grid, args.backend, args.alpha, args.periods, args.workers)
        rows = result.rows()
        for r in rows:
            r["offset_ms"] = r["offset"] * 1000.0 / experiments.SAMPLE_RATE
        columns = ["offset", "offset_ms", "rate", "mean_sd", "inverse_sd", "count"]
        payload = result.to_json_dict()
    else:
        summary = experiments.backend_agreement(grid, args.alpha, args.periods)
        rows = summary.rows
        columns = ["f0", "oq", "am", "vowel", "fg_zzt", "fg_cc", "bw_zzt", "bw_cc"]
        payload = {
            "excluded": summary.excluded,
            "fraction_fg_within": summary.fraction_fg_within,
            "fraction_bw_within": summary.fraction_bw_within,
            "tolerance": summary.tolerance,
            "rows": rows,
        }
    io.write_csv(args.out, rows, columns, f"sweep-{args.figure}")
    if args.json:
        io.write_json(args.json, payload, f"sweep-{args.figure}")
    print(f"{len(rows)} rows written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    results = experiments.benchmark(tuple(args.pitches), repetitions=args.repetitions)
    print(experiments.timing_table(results))
    if args.out:
        io.write_json(args.out, {"results": [vars(r) for r in results]}, "bench")
    return EXIT_OK


def _read_manifest(path: Path):
    items = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise FormatError("expected 'WAV GCI [PITCH]'", line=lineno)
        paths = [path.parent / f for f in fields]
        items.append((paths[0], paths[1], paths[2] if len(paths) == 3 else None))
    return items


def _cmd_analyze(args) -> int:
    _check_analysis_args(args)
    items = _read_manifest(args.manifest)
    report = experiments.corpus_analysis(
        items, args.backend, args.alpha, args.periods, args.cog_threshold, args.gci_unit, args.gci_shift_ms,
        _nfft(args),
    )
    io.write_csv(args.out, report.rows, experiments.FEATURE_COLUMNS, "features")
    if args.summary:
        io.write_json(args.summary, report.summary(), "corpus-summary")
    for err in report.errors:
        log.warning("%s", err)
    print(f"{report.n_frames} frames analysed, {100 * report.valid_fraction:.2f}% valid, {len(report.errors)} problems")
    if items and not report.rows and report.errors:
        return EXIT_FORMAT
    return EXIT_OK


COMMANDS = {
    "synth": _cmd_synth,
    "decompose": _cmd_decompose,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FormatError, OSError) as exc:
        print(f"glottcc: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericalError as exc:
        print(f"glottcc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        print(f"glottcc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
