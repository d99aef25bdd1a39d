"""Causal-anticausal decomposition with the complex cepstrum.

Forward transform: FFT, log magnitude, sequentially unwrapped phase with its
integer linear-phase slope removed, inverse FFT. Negative quefrencies hold
the maximum-phase (glottal open phase) part of the frame, positive ones the
minimum-phase part.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError, ParameterError
from .signal import AnalysisFrame

log = logging.getLogger(__name__)

DEFAULT_NFFT = 4096
SPECTRAL_FLOOR = 1e-300
JUMP_MARGIN = 0.2
MAX_LOG_MAGNITUDE = 300.0

SIDES = ("full", "causal", "anticausal")


@dataclass(frozen=True)
class ComplexCepstrum:
    """Complex cepstrum on the quefrency range ``[-n_fft/2, n_fft/2 - 1]``.

    ``values[i]`` belongs to quefrency ``i - n_fft // 2``. ``removed_linear_phase``
    is ``r = round(phase(pi) / pi)``, i.e. minus the delay (in samples) taken
    out of the frame before the log. ``sign`` is the factor pulled out when the
    DC value of the spectrum is negative.
    """

    values: np.ndarray
    n_fft: int
    removed_linear_phase: int
    sign: int = 1
    side: str = "full"
    phase_ambiguous: bool = False

    def __post_init__(self):
        if self.n_fft < 4 or self.n_fft & (self.n_fft - 1):
            raise ParameterError(f"n_fft must be a power of two, got {self.n_fft}")
        if len(self.values) != self.n_fft:
            raise ParameterError("values must have n_fft entries")
        if self.side not in SIDES:
            raise ParameterError(f"side must be one of {SIDES}")

    @property
    def quefrencies(self) -> np.ndarray:
        return np.arange(-(self.n_fft // 2), self.n_fft // 2)

    def at(self, n_min: int, n_max: int) -> np.ndarray:
        """Values for quefrencies ``n_min..n_max`` inclusive."""
        half = self.n_fft // 2
        if n_min < -half or n_max > half - 1 or n_min > n_max:
            raise ParameterError(f"quefrency range [{n_min}, {n_max}] outside [{-half}, {half - 1}]")
        return self.values[n_min + half : n_max + half + 1]

    def __add__(self, other: "ComplexCepstrum") -> "ComplexCepstrum":
        if self.n_fft != other.n_fft or self.removed_linear_phase != other.removed_linear_phase:
            raise ParameterError("cepstra must share n_fft and removed linear phase")
        return replace(self, values=self.values + other.values, side="full")


def _samples(frame) -> np.ndarray:
    if isinstance(frame, AnalysisFrame):
        return frame.windowed_samples
    return np.asarray(frame, dtype=float)


def default_nfft(n: int) -> int:
    """Smallest power of two that is at least ``max(4 n, 4096)``."""
    return max(DEFAULT_NFFT, 1 << int(np.ceil(np.log2(4 * n))))


def complex_cepstrum(frame, n_fft: int | None = None) -> ComplexCepstrum:
    """Complex cepstrum of a real frame.

    Raises
    ------
    NumericalError
        If the spectrum has a (numerical) zero on the FFT grid; the phase and
        the log are then undefined. A different window usually helps.
    """
    s = _samples(frame)
    if s.ndim != 1 or s.size == 0 or not np.any(s):
        raise ParameterError("frame must be a non-zero 1-D sequence")
    if n_fft is None:
        n_fft = default_nfft(s.size)
    if n_fft & (n_fft - 1) or n_fft < 4 * s.size:
        raise ParameterError(f"n_fft must be a power of two >= 4 * frame length ({4 * s.size}), got {n_fft}")

    spec = np.fft.rfft(s, n_fft)
    mag = np.abs(spec)
    if mag.min() < SPECTRAL_FLOOR:
        k = int(np.argmin(mag))
        raise NumericalError(
            f"spectral zero at bin {k}; try a different window", bin=k, magnitude=float(mag[k])
        )
    sign = 1
    if spec[0].real < 0:
        sign = -1
        spec = -spec
    wrapped = np.angle(spec)
    steps = np.abs(np.diff(wrapped))
    ambiguous = bool(np.any(np.abs(steps - np.pi) < JUMP_MARGIN))
    if ambiguous:
        log.debug("phase unwrapping ambiguous: adjacent-bin jump within %.2f rad of pi", JUMP_MARGIN)
    phase = np.unwrap(wrapped)
    half = n_fft // 2
    r = int(np.round(phase[half] / np.pi))
    phase -= np.pi * r * np.arange(half + 1) / half

    ceps = np.fft.irfft(np.log(mag) + 1j * phase, n_fft)
    return ComplexCepstrum(
        values=np.fft.fftshift(ceps),
        n_fft=n_fft,
        removed_linear_phase=r,
        sign=sign,
        phase_ambiguous=ambiguous,
    )


def lifter(cc: ComplexCepstrum, side: str) -> ComplexCepstrum:
    """Keep one side of the cepstrum.

    ``"anticausal"`` keeps ``n < 0``; ``"causal"`` keeps ``n >= 0``. The
    ``n = 0`` term (and the spectrum sign) stays with the causal side so that
    the two halves sum back to the original.
    """
    if side not in ("causal", "anticausal"):
        raise ParameterError(f"side must be 'causal' or 'anticausal', got {side!r}")
    q = cc.quefrencies
    keep = q < 0 if side == "anticausal" else q >= 0
    if cc.side not in ("full", side):
        keep = np.zeros_like(keep)
    values = np.where(keep, cc.values, 0.0)
    return replace(cc, values=values, side=side, sign=1 if side == "anticausal" else cc.sign)


def inverse_cepstrum(cc: ComplexCepstrum, out_length: int | None = None) -> np.ndarray:
    """Time signal of a (possibly liftered) cepstrum.

    The removed delay ``-r`` is put back, so a full round trip returns the
    original frame and an anticausal component ends at the frame index of
    the causal/anticausal boundary.
    """
    if out_length is None:
        out_length = cc.n_fft
    if not 0 < out_length <= cc.n_fft:
        raise ParameterError(f"out_length must lie in [1, {cc.n_fft}]")
    half = cc.n_fft // 2
    log_spec = np.fft.rfft(np.fft.ifftshift(cc.values))
    if log_spec.real.max() > MAX_LOG_MAGNITUDE:
        raise NumericalError("log spectrum too large to exponentiate", max_log=float(log_spec.real.max()))
    log_spec = log_spec + 1j * np.pi * cc.removed_linear_phase * np.arange(half + 1) / half
    x = np.fft.irfft(np.exp(log_spec), cc.n_fft)
    return cc.sign * x[:out_length]


def estimate_glottal_cc(frame, n_fft: int | None = None, out_length: int | None = None) -> np.ndarray:
    """Full CC pipeline: cepstrum, anticausal lifter, inverse.

    The estimate is in frame coordinates with unit value at its origin
    (the causal/anticausal boundary).
    """
    s = _samples(frame)
    cc = complex_cepstrum(s, n_fft)
    if out_length is None:
        out_length = s.size
    return inverse_cepstrum(lifter(cc, "anticausal"), out_length)
