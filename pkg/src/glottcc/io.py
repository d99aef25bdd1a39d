"""WAV, GCI and pitch file reading, and deterministic CSV/JSON writers.

Formats
-------
WAV
    RIFF/WAVE, mono, PCM 16-bit or IEEE float 32-bit. PCM samples are
    divided by 32768.
GCI
    One instant per line. Values with a decimal point or exponent are read
    as seconds, plain integers as sample indices; ``unit`` overrides the
    guess. Blank lines and ``#`` comments are ignored.
Pitch
    Two whitespace- or comma-separated columns per line: time in seconds and
    f0 in Hz (0 marks unvoiced).
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.io import wavfile

from .errors import FormatError, ParameterError
from .signal import SampleBuffer

SCHEMA_VERSION = 1
PCM_SCALE = 32768.0
WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
GCI_UNITS = ("s", "samples")


def _chunks(data: bytes):
    """Yield ``(chunk_id, payload)`` for every sub-chunk of a RIFF/WAVE file."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError("RIFF chunk: not a RIFF/WAVE file")
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos : pos + 8])
        payload = data[pos + 8 : pos + 8 + size]
        if len(payload) < size:
            raise FormatError(f"{cid.decode('latin-1').strip()!r} chunk: truncated ({len(payload)} of {size} bytes)")
        yield cid.decode("latin-1"), payload
        pos += 8 + size + (size & 1)


def read_wav(path) -> SampleBuffer:
    """Read a mono PCM16 or float32 WAV file into a :class:`SampleBuffer`.

    Raises
    ------
    FormatError
        Naming the offending chunk, for anything but mono PCM16/float32.
    """
    data = Path(path).read_bytes()
    fmt = samples = None
    for cid, payload in _chunks(data):
        if cid == "fmt ":
            if len(payload) < 16:
                raise FormatError("'fmt ' chunk: too short")
            tag, channels, rate, _, _, bits = struct.unpack("<HHIIHH", payload[:16])
            if tag == WAVE_FORMAT_EXTENSIBLE and len(payload) >= 26:
                tag = struct.unpack("<H", payload[24:26])[0]
            if channels != 1:
                raise FormatError(f"'fmt ' chunk: {channels} channels, only mono is supported")
            if (tag, bits) not in ((WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32)):
                raise FormatError(
                    f"'fmt ' chunk: format tag {tag} with {bits} bits, expected PCM 16-bit or float 32-bit"
                )
            fmt = (tag, rate)
        elif cid == "data":
            if fmt is None:
                raise FormatError("'data' chunk: appears before the 'fmt ' chunk")
            tag, rate = fmt
            width = 2 if tag == WAVE_FORMAT_PCM else 4
            if len(payload) % width:
                raise FormatError(f"'data' chunk: {len(payload)} bytes is not a whole number of samples")
            if tag == WAVE_FORMAT_PCM:
                samples = np.frombuffer(payload, dtype="<i2").astype(float) / PCM_SCALE
            else:
                samples = np.frombuffer(payload, dtype="<f4").astype(float)
    if fmt is None:
        raise FormatError("'fmt ' chunk: missing")
    if samples is None:
        raise FormatError("'data' chunk: missing")
    if not np.all(np.isfinite(samples)):
        raise FormatError("'data' chunk: contains NaN or Inf samples")
    return SampleBuffer(samples, fmt[1])


def write_wav(path, signal: SampleBuffer, encoding: str = "float32") -> None:
    """Write a mono WAV file; ``encoding`` is ``"float32"`` or ``"pcm16"``.

    PCM16 values are ``round(x * 32768)`` clipped to the int16 range, so a
    write/read round trip is exact to half an LSB away from full scale.
    """
    x = np.asarray(signal.samples, dtype=float)
    if encoding == "float32":
        out = x.astype("<f4")
    elif encoding == "pcm16":
        out = np.clip(np.round(x * PCM_SCALE), -32768, 32767).astype("<i2")
    else:
        raise ParameterError(f"encoding must be 'float32' or 'pcm16', got {encoding!r}")
    wavfile.write(str(path), signal.sample_rate, out)


@dataclass(frozen=True)
class GciAnnotation:
    """Strictly increasing glottal closure instants in seconds or samples."""

    instants: np.ndarray
    unit: str = "samples"

    def __post_init__(self):
        if self.unit not in GCI_UNITS:
            raise ParameterError(f"unit must be one of {GCI_UNITS}")
        inst = np.asarray(self.instants, dtype=float)
        if inst.ndim != 1:
            raise ParameterError("instants must be one-dimensional")
        if inst.size > 1 and np.any(np.diff(inst) <= 0):
            raise ParameterError("GCI instants must be strictly increasing")
        object.__setattr__(self, "instants", inst)

    def __len__(self):
        return len(self.instants)

    def samples(self, sample_rate: int) -> np.ndarray:
        """Instants as integer sample indices (seconds are rounded to the nearest sample)."""
        if self.unit == "samples":
            return self.instants.astype(int)
        return np.floor(self.instants * sample_rate + 0.5).astype(int)


@dataclass(frozen=True)
class PitchTrack:
    times: np.ndarray
    f0: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.f0, dtype=float)
        if t.shape != f.shape or t.ndim != 1:
            raise ParameterError("times and f0 must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ParameterError("pitch times must be strictly increasing")
        if np.any(f < 0):
            raise ParameterError("f0 values must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "f0", f)

    def f0_at(self, times) -> np.ndarray:
        """f0 of the nearest pitch frame; 0 (unvoiced) more than one hop outside the track."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        n = self.times.size
        if n == 0:
            return np.zeros(t.size)
        right = np.clip(np.searchsorted(self.times, t), 0, n - 1)
        left = np.clip(right - 1, 0, n - 1)
        nearer_left = np.abs(self.times[left] - t) <= np.abs(self.times[right] - t)
        out = self.f0[np.where(nearer_left, left, right)]
        hop = float(np.median(np.diff(self.times))) if n > 1 else 0.0
        out[(t < self.times[0] - hop) | (t > self.times[-1] + hop)] = 0.0
        return out


def _records(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _looks_fractional(token: str) -> bool:
    return any(c in token for c in ".eE")


def read_gci(path, sample_rate: int | None = None, unit: str | None = None,
             duration: float | None = None) -> GciAnnotation:
    """Parse a GCI file.

    Parameters
    ----------
    unit : {"s", "samples"}, optional
        Overrides the unit guessed from the first value.
    duration : float, optional
        Audio duration in seconds; instants beyond it are rejected. Needs
        ``sample_rate`` when the file holds sample indices.

    Raises
    ------
    FormatError
        On unparsable, negative, non-increasing or out-of-range entries,
        with the offending line number.
    """
    if unit is not None and unit not in GCI_UNITS:
        raise ParameterError(f"unit must be one of {GCI_UNITS}, got {unit!r}")
    values, lines = [], []
    guessed = None
    for lineno, line in _records(Path(path).read_text()):
        fields = line.replace(",", " ").split()
        if len(fields) != 1:
            raise FormatError(f"expected one value, found {len(fields)}", line=lineno)
        token = fields[0]
        try:
            v = float(token)
        except ValueError:
            raise FormatError(f"cannot parse {token!r} as a number", line=lineno) from None
        if not math.isfinite(v) or v < 0:
            raise FormatError(f"GCI {token} must be a finite non-negative number", line=lineno)
        if guessed is None:
            guessed = "s" if _looks_fractional(token) else "samples"
        elif unit is None and (guessed == "s") != _looks_fractional(token):
            raise FormatError(f"{token!r} mixes seconds and sample indices", line=lineno)
        if values and v <= values[-1]:
            raise FormatError(f"GCI {token} is not after the previous one ({values[-1]:g})", line=lineno)
        values.append(v)
        lines.append(lineno)
    final_unit = unit or guessed or "samples"
    if final_unit == "samples" and any(v != int(v) for v in values):
        bad = next(i for i, v in enumerate(values) if v != int(v))
        raise FormatError("sample indices must be integers", line=lines[bad])
    if duration is not None and values:
        limit = duration if final_unit == "s" else (duration * sample_rate if sample_rate else None)
        if limit is None:
            raise ParameterError("sample_rate is required to range-check sample indices")
        for v, lineno in zip(values, lines):
            if v >= limit:
                raise FormatError(f"GCI {v:g} lies beyond the end of the audio", line=lineno)
    return GciAnnotation(np.array(values), final_unit)


def read_pitch(path) -> PitchTrack:
    """Parse a two-column ``time f0`` pitch file."""
    times, f0 = [], []
    for lineno, line in _records(Path(path).read_text()):
        fields = line.replace(",", " ").split()
        if len(fields) != 2:
            raise FormatError(f"expected two values (time, f0), found {len(fields)}", line=lineno)
        try:
            t, f = float(fields[0]), float(fields[1])
        except ValueError:
            raise FormatError(f"cannot parse {line!r}", line=lineno) from None
        if not (math.isfinite(t) and math.isfinite(f)) or f < 0:
            raise FormatError(f"invalid pitch record {line!r}", line=lineno)
        if times and t <= times[-1]:
            raise FormatError(f"time {t:g} is not after the previous one", line=lineno)
        times.append(t)
        f0.append(f)
    return PitchTrack(np.array(times), np.array(f0))


def write_gci(path, gci_samples: Sequence[int], unit: str = "samples", sample_rate: int | None = None) -> None:
    """Write GCIs one per line, as integer samples or as seconds."""
    g = np.asarray(gci_samples)
    if unit == "samples":
        text = "".join(f"{int(v)}\n" for v in g)
    elif unit == "s":
        if sample_rate is None:
            raise ParameterError("sample_rate is required to write seconds")
        text = "".join(f"{v / sample_rate:.9f}\n" for v in g)
    else:
        raise ParameterError(f"unit must be one of {GCI_UNITS}")
    Path(path).write_text(text)


def shift_gcis(gci_samples, shift_ms: float, sample_rate: int) -> np.ndarray:
    """Delay-compensate annotations by ``shift_ms`` milliseconds (rounded to samples)."""
    return np.asarray(gci_samples, dtype=int) + int(round(shift_ms * 1e-3 * sample_rate))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def csv_text(rows: Iterable[dict], columns: Sequence[str], kind: str) -> str:
    """CSV text with a schema comment line and a header row, even for no rows."""
    buf = _io.StringIO()
    buf.write(f"# glottcc {kind} schema {SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: Iterable[dict], columns: Sequence[str], kind: str) -> None:
    Path(path).write_text(csv_text(rows, columns, kind))


def read_csv(path) -> tuple[int, list[dict]]:
    """Read a CSV written by :func:`write_csv`; returns the schema version and the rows as strings."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# glottcc"):
        raise FormatError("missing schema line", line=1)
    version = int(lines[0].rsplit(" ", 1)[1])
    return version, list(csv.DictReader(lines[1:]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload: dict, kind: str) -> None:
    """Sorted-key JSON with a ``schema`` field; NaN is written as null."""
    doc = {"schema": {"kind": kind, "version": SCHEMA_VERSION}, **_jsonable(payload)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
