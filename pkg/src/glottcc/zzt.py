"""Causal-anticausal decomposition from the zeros of the frame z-transform.

A frame ``s(0..N-1)`` is read as the polynomial ``s(0) z^(N-1) + ... + s(N-1)``.
Its roots inside (or on) the unit circle form the causal, minimum-phase part;
those outside form the anticausal, maximum-phase part carrying the glottal
open phase.

Output layout ("frame coordinates"): component waveforms are placed so that
``convolve(anticausal, causal)`` lines up with the original frame. The
anticausal waveform ends at its origin sample, index ``leading_trim + M_o``,
where it is normalised to 1; the causal waveform starts at index 0 and
carries the whole gain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigvals
from scipy.linalg import matrix_balance

from .errors import NumericalError, ParameterError
from .signal import AnalysisFrame

log = logging.getLogger(__name__)

UNIT_CIRCLE_TOL = 1e-6


@dataclass(frozen=True)
class ZztRepresentation:
    """Gain and split zero sets of a trimmed frame polynomial."""

    gain: float
    causal_zeros: np.ndarray
    anticausal_zeros: np.ndarray
    frame_length: int
    leading_trim: int = 0
    trailing_trim: int = 0
    n_boundary: int = 0
    flags: frozenset = field(default_factory=frozenset)

    @property
    def degree(self) -> int:
        return len(self.causal_zeros) + len(self.anticausal_zeros)

    @property
    def origin(self) -> int:
        """Frame index of the anticausal/causal boundary."""
        return self.leading_trim + len(self.anticausal_zeros)


def _samples(frame) -> np.ndarray:
    if isinstance(frame, AnalysisFrame):
        return frame.windowed_samples
    return np.asarray(frame, dtype=float)


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of ``coeffs[0] x^d + ... + coeffs[d]`` via the balanced companion matrix."""
    c = np.asarray(coeffs, dtype=float)
    if c.size < 2:
        return np.empty(0, dtype=complex)
    if c[0] == 0:
        raise ParameterError("leading coefficient must be non-zero")
    degree = c.size - 1
    companion = np.zeros((degree, degree))
    with np.errstate(over="ignore"):
        companion[0, :] = -c[1:] / c[0]
    companion[np.arange(1, degree), np.arange(degree - 1)] = 1.0
    if not np.all(np.isfinite(companion)):
        raise NumericalError("companion matrix overflows; leading coefficient too small", degree=degree)
    balanced, _ = matrix_balance(companion, permute=False)
    try:
        roots = eigvals(balanced, overwrite_a=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericalError("companion eigenvalue solver did not converge", degree=degree) from exc
    return roots


def compute_zzt(frame, tol: float = UNIT_CIRCLE_TOL) -> ZztRepresentation:
    """Factor a frame into gain, causal zeros and anticausal zeros.

    Exact zeros at either end of the frame (the window endpoints) are trimmed
    before rooting; the counts are kept so the components can be put back in
    frame coordinates. Zeros whose modulus lies in ``(1, 1 + tol]`` are
    assigned to the causal side.
    """
    s = _samples(frame)
    if s.ndim != 1 or s.size == 0:
        raise ParameterError("frame must be a non-empty 1-D sequence")
    nz = np.flatnonzero(s)
    if nz.size == 0:
        raise ParameterError("cannot factor an all-zero frame")
    lead, last = int(nz[0]), int(nz[-1])
    trimmed = s[lead : last + 1]
    roots = polynomial_roots(trimmed)
    mod = np.abs(roots)
    outside = mod > 1.0 + tol
    n_boundary = int(np.count_nonzero((mod > 1.0) & ~outside))
    if n_boundary:
        log.debug("%d zero(s) within %.1e outside the unit circle assigned causal", n_boundary, tol)
    return ZztRepresentation(
        gain=float(trimmed[0]),
        causal_zeros=roots[~outside],
        anticausal_zeros=roots[outside],
        frame_length=s.size,
        leading_trim=lead,
        trailing_trim=s.size - 1 - last,
        n_boundary=n_boundary,
    )


def _log_factor_sum(roots, n_fft: int, anticausal: bool) -> np.ndarray:
    """``sum(log(1 - z/Z))`` (anticausal) or ``sum(log(1 - Z/z))`` (causal) on the rfft grid.

    Summing logs instead of expanding the product keeps hundreds of zeros
    near the unit circle from overflowing or cancelling.
    """
    omega = 2.0 * np.pi * np.arange(n_fft // 2 + 1) / n_fft
    out = np.zeros(omega.size, dtype=complex)
    e = np.exp(1j * omega) if anticausal else np.exp(-1j * omega)
    chunk = max(1, 262144 // omega.size)
    for i in range(0, len(roots), chunk):
        z = np.asarray(roots[i : i + chunk])
        u = e[:, None] / z[None, :] if anticausal else z[None, :] * e[:, None]
        out += np.sum(np.log1p(-u), axis=1)
    return out


def _component(roots, anticausal: bool) -> np.ndarray:
    """Time-ordered coefficients of the monic factor product, unit value at the origin."""
    m = len(roots)
    if m == 0:
        return np.ones(1)
    n_fft = 1 << int(np.ceil(np.log2(2 * (m + 1))))
    x = np.fft.irfft(np.exp(_log_factor_sum(roots, n_fft, anticausal)), n_fft)
    if anticausal:
        # coefficient of z^k sits at index -k
        return np.concatenate([x[n_fft - m :], x[:1]])
    return x[: m + 1]


def _place(values: np.ndarray, start: int, out_length: int) -> np.ndarray:
    out = np.zeros(out_length)
    stop = min(start + len(values), out_length)
    lo = max(start, 0)
    if stop > lo:
        out[lo:stop] = values[lo - start : stop - start]
    return out


def anticausal_gain(zzt: ZztRepresentation) -> float:
    """``prod(-Z_AC)``: the constant term of the monic anticausal polynomial."""
    z = zzt.anticausal_zeros
    if len(z) == 0:
        return 1.0
    sign = np.sign(np.real(np.prod(-z / np.abs(z))))
    return float(sign * np.exp(np.sum(np.log(np.abs(z)))))


def anticausal_waveform(zzt: ZztRepresentation) -> np.ndarray:
    """Maximum-phase component, time-ordered, ending at its origin value 1."""
    return _component(zzt.anticausal_zeros, anticausal=True)


def causal_waveform(zzt: ZztRepresentation) -> np.ndarray:
    """Minimum-phase component, time-ordered from its origin, carrying the gain."""
    return zzt.gain * anticausal_gain(zzt) * _component(zzt.causal_zeros, anticausal=False)


def anticausal_signal(zzt: ZztRepresentation, out_length: int | None = None) -> np.ndarray:
    """Anticausal component in frame coordinates.

    With no anticausal zeros the result is a unit impulse at the origin and
    ``"no_anticausal"`` should be read from :func:`has_anticausal`.
    """
    if out_length is None:
        out_length = zzt.frame_length
    wave = anticausal_waveform(zzt)
    return _place(wave, zzt.leading_trim, out_length)


def causal_signal(zzt: ZztRepresentation, out_length: int | None = None) -> np.ndarray:
    """Causal component starting at index 0; ``out_length`` defaults to its natural length."""
    wave = causal_waveform(zzt)
    if out_length is None:
        out_length = len(wave) + zzt.trailing_trim
    return _place(wave, 0, out_length)


def has_anticausal(zzt: ZztRepresentation) -> bool:
    return len(zzt.anticausal_zeros) > 0


def roots_to_cepstrum(zzt: ZztRepresentation, n_min: int, n_max: int) -> np.ndarray:
    """Complex cepstrum evaluated analytically from the zeros.

    ``c[n] = log|gain * prod(Z_AC)|`` at ``n = 0``,
    ``sum(Z_AC ** n) / n`` for ``n < 0`` and ``-sum(Z_C ** n) / n`` for
    ``n > 0``. The linear-phase delay and the overall sign are excluded,
    matching :func:`glottcc.cepstrum.complex_cepstrum`.
    """
    if n_min > n_max:
        raise ParameterError("n_min must not exceed n_max")
    n = np.arange(n_min, n_max + 1)
    out = np.zeros(n.size, dtype=complex)
    neg, pos = n < 0, n > 0
    if len(zzt.anticausal_zeros) and neg.any():
        z = zzt.anticausal_zeros[None, :]
        k = n[neg][:, None]
        out[neg] = np.sum(z ** k, axis=1) / n[neg]
    if len(zzt.causal_zeros) and pos.any():
        z = zzt.causal_zeros[None, :]
        k = n[pos][:, None]
        out[pos] = -np.sum(z ** k, axis=1) / n[pos]
    out[n == 0] = np.log(abs(zzt.gain)) + np.sum(np.log(np.abs(zzt.anticausal_zeros)))
    if np.max(np.abs(out.imag), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(out.real))):
        log.warning("root cepstrum has imaginary residue %.3g", np.max(np.abs(out.imag)))
    return out.real


def estimate_glottal_zzt(frame, out_length: int | None = None) -> np.ndarray:
    """Full ZZT pipeline: factor, keep the zeros outside the unit circle, rebuild."""
    return anticausal_signal(compute_zzt(frame), out_length)
