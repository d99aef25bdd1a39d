"""Decomposition quality measures and glottal voice-quality features."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import resample_poly

from .errors import ParameterError

COG_THRESHOLD_HZ = 2750.0
FG_CEILING_HZ = 1000.0
SD_MAX_FREQ_HZ = 4000.0
FLOOR_DB = -120.0
MAX_HARMONICS = 20
FEATURE_RATE = 8000
DETERMINATION_TOLERANCE = 0.10


@dataclass
class GlottalFeatures:
    fg_hz: float
    bw_hz: float
    naq: float
    h1h2_db: float
    hrf_db: float
    cog_hz: float
    valid: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _fft_size(n: int, minimum: int) -> int:
    return max(minimum, 1 << int(np.ceil(np.log2(max(n, 2)))))


def amplitude_spectrum(signal, sample_rate: float, n_fft: int | None = None):
    """Return ``(freqs, |X(f)|)`` on the non-negative frequency grid."""
    x = np.asarray(signal, dtype=float)
    if n_fft is None:
        n_fft = _fft_size(x.size, 8192)
    amps = np.abs(np.fft.rfft(x, n_fft))
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    return freqs, amps


def spectral_distortion(g_true, g_est, sample_rate: float = 16000, n_fft: int | None = None) -> float:
    """Gain-aligned RMS log-spectral difference in dB over 0-4 kHz.

    Each magnitude spectrum is floored at -120 dB below its own peak. The mean
    dB difference is removed before the RMS, which makes the measure blind to
    a scalar gain between the two pulses.
    """
    a = np.asarray(g_true, dtype=float)
    b = np.asarray(g_est, dtype=float)
    if not np.any(a) or not np.any(b):
        raise ParameterError("spectral distortion needs two non-zero signals")
    if n_fft is None:
        n_fft = _fft_size(max(a.size, b.size), 4096)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    band = freqs <= SD_MAX_FREQ_HZ
    diff = _db(np.abs(np.fft.rfft(a, n_fft)))[band] - _db(np.abs(np.fft.rfft(b, n_fft)))[band]
    diff -= diff.mean()
    return float(np.sqrt(np.mean(diff**2)))


def _db(mag: np.ndarray) -> np.ndarray:
    ref = mag.max()
    return 20.0 * np.log10(np.maximum(mag, ref * 10.0 ** (FLOOR_DB / 20.0)))


def glottal_formant(anticausal, sample_rate: float, n_fft: int | None = None) -> tuple[float, float]:
    """Glottal formant frequency and 3 dB bandwidth of an open-phase estimate.

    The peak is searched in (0, 1000] Hz and must be a local maximum of the
    amplitude spectrum; otherwise ``(nan, nan)`` is returned. When the lower
    flank never drops 3 dB before DC, the bandwidth is twice the upper
    half-width.
    """
    x = np.asarray(anticausal, dtype=float)
    if not np.any(x):
        raise ParameterError("glottal formant of an all-zero signal")
    if n_fft is None:
        n_fft = _fft_size(x.size, 1 << 16) if sample_rate > 8000 else _fft_size(x.size, 1 << 15)
    freqs, amps = amplitude_spectrum(x, sample_rate, n_fft)
    idx = np.flatnonzero((freqs > 0) & (freqs <= min(FG_CEILING_HZ, sample_rate / 2)))
    if idx.size == 0:
        return float("nan"), float("nan")
    k = int(idx[np.argmax(amps[idx])])
    if k == idx[-1] or amps[k - 1] >= amps[k] or amps[k + 1] > amps[k]:
        return float("nan"), float("nan")
    level = amps[k] / np.sqrt(2.0)
    above = np.flatnonzero(amps[k:] < level)
    if above.size == 0:
        return float(freqs[k]), float("nan")
    upper = _crossing(freqs, amps, k + above[0] - 1, k + above[0], level)
    below = np.flatnonzero(amps[: k + 1] < level)
    if below.size == 0:
        bw = 2.0 * (upper - freqs[k])
    else:
        lower = _crossing(freqs, amps, below[-1], below[-1] + 1, level)
        bw = upper - lower
    return float(freqs[k]), float(bw)


def _crossing(freqs, amps, i, j, level) -> float:
    """Linear interpolation of the frequency where the spectrum crosses ``level``."""
    a0, a1 = amps[i], amps[j]
    if a1 == a0:
        return float(freqs[i])
    return float(freqs[i] + (level - a0) * (freqs[j] - freqs[i]) / (a1 - a0))


def determination_rate(pairs) -> float:
    """Fraction of ``(fg_true, fg_est)`` pairs with relative error strictly below 10%.

    Undefined estimates (NaN) count as failures.
    """
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("determination rate of an empty list")
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    true, est = arr[:, 0], arr[:, 1]
    if np.any(~(true > 0)):
        raise ParameterError("true glottal formant frequencies must be positive")
    with np.errstate(invalid="ignore"):
        ok = np.abs(est - true) / true < DETERMINATION_TOLERANCE
    return float(np.count_nonzero(ok) / len(arr))


def naq(glottal_derivative, f0: float, sample_rate: float) -> float:
    """Normalised amplitude quotient of a flow-derivative waveform.

    Flow peak divided by the magnitude of the derivative minimum and by the
    period, both in samples. The flow is the running sum of the derivative
    anchored to zero at the last sample (the closure), which equals the plain
    running sum on an area-balanced cycle and stays faithful on anticausal
    estimates whose opening is attenuated by the analysis window. NaN when
    the derivative never goes negative.
    """
    d = np.asarray(glottal_derivative, dtype=float)
    if d.size == 0:
        raise ParameterError("empty derivative")
    if f0 <= 0:
        raise ParameterError("f0 must be positive")
    d_min = d.min()
    if d_min >= 0:
        return float("nan")
    flow_peak = (np.cumsum(d) - d.sum()).max()
    return float(flow_peak / (-d_min * (sample_rate / f0)))


def _check_resolution(freqs, f0):
    if len(freqs) < 2:
        raise ParameterError("spectrum needs at least two bins")
    df = freqs[1] - freqs[0]
    if df > f0 / 8.0:
        raise ParameterError(f"spectral resolution {df:.2f} Hz is coarser than f0/8 = {f0 / 8:.2f} Hz")


def harmonic_amplitude(amps, freqs, freq: float, f0: float) -> float:
    """Largest bin within +/- f0/4 of ``freq``."""
    band = np.abs(np.asarray(freqs) - freq) <= f0 / 4.0
    if not band.any():
        return float("nan")
    return float(np.max(np.asarray(amps)[band]))


def h1h2(amps, freqs, f0: float) -> float:
    """Level difference in dB between the first two harmonics."""
    _check_resolution(freqs, f0)
    if 2.25 * f0 > freqs[-1]:
        return float("nan")
    a1 = harmonic_amplitude(amps, freqs, f0, f0)
    a2 = harmonic_amplitude(amps, freqs, 2 * f0, f0)
    if not a1 > 0 or not a2 > 0:
        return float("nan")
    return float(20.0 * np.log10(a1 / a2))


def hrf(amps, freqs, f0: float, n_harmonics: int = MAX_HARMONICS) -> float:
    """Harmonic richness factor: summed amplitude of harmonics 2..K over H1, in dB.

    K is the smaller of ``n_harmonics`` (capped at 20) and the last harmonic
    whose search band fits below the top of the grid. An empty upper sum
    gives the -120 dB floor.
    """
    _check_resolution(freqs, f0)
    k_max = min(n_harmonics, MAX_HARMONICS, int(np.floor((freqs[-1] - f0 / 4.0) / f0)))
    if k_max < 2:
        return float("nan")
    a1 = harmonic_amplitude(amps, freqs, f0, f0)
    if not a1 > 0:
        return float("nan")
    upper = sum(harmonic_amplitude(amps, freqs, k * f0, f0) for k in range(2, k_max + 1))
    if upper <= 0:
        return FLOOR_DB
    return float(max(20.0 * np.log10(upper / a1), FLOOR_DB))


def spectral_cog(signal, sample_rate: float, n_fft: int | None = None) -> float:
    """Power-weighted mean frequency over the non-negative frequency grid."""
    x = np.asarray(signal, dtype=float)
    if not np.any(x):
        raise ParameterError("spectral centre of gravity of a zero-energy signal")
    freqs, amps = amplitude_spectrum(x, sample_rate, n_fft or _fft_size(x.size, 1024))
    power = amps**2
    return float(np.sum(freqs * power) / np.sum(power))


def classify_decomposition(cog_hz: float, threshold_hz: float = COG_THRESHOLD_HZ) -> bool:
    """True when the centre of gravity does not exceed the threshold."""
    if cog_hz < 0:
        raise ParameterError("centre of gravity must be non-negative")
    return bool(cog_hz <= threshold_hz)


def to_feature_rate(signal, sample_rate: int, target: int = FEATURE_RATE) -> np.ndarray:
    """Polyphase resampling of an estimate to the feature rate (8 kHz)."""
    if sample_rate == target:
        return np.asarray(signal, dtype=float)
    g = np.gcd(int(sample_rate), int(target))
    return resample_poly(np.asarray(signal, dtype=float), target // g, int(sample_rate) // g)


def glottal_features(
    derivative,
    f0: float,
    sample_rate: int,
    cog_threshold: float = COG_THRESHOLD_HZ,
    feature_rate: int = FEATURE_RATE,
) -> GlottalFeatures:
    """All voice-quality features of one glottal flow-derivative estimate.

    The estimate must have the derivative polarity (negative excitation at
    the GCI). It is first brought to ``feature_rate``; features are computed
    on that resampled signal.
    """
    x = to_feature_rate(derivative, sample_rate, feature_rate)
    if not np.any(x):
        raise ParameterError("empty glottal estimate")
    fg, bw = glottal_formant(x, feature_rate)
    n_fft = _fft_size(x.size, 1 << 15)
    freqs, amps = amplitude_spectrum(x, feature_rate, n_fft)
    cog = spectral_cog(x, feature_rate, n_fft)
    return GlottalFeatures(
        fg_hz=fg,
        bw_hz=bw,
        naq=naq(x, f0, feature_rate),
        h1h2_db=h1h2(amps, freqs, f0),
        hrf_db=hrf(amps, freqs, f0),
        cog_hz=cog,
        valid=classify_decomposition(cog, cog_threshold),
    )
