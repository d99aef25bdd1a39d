"""Liljencrants-Fant source, all-pole vocal tract and the synthetic test grid.

Timing is expressed in samples: with period ``P = round(fs / f0)`` the GCI
falls on sample ``te = round(oq * P)``, the flow peak at ``tp = am * te`` and
the return-phase constant is ``ta = 0.02 * P``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .errors import NumericalError, ParameterError
from .signal import SampleBuffer

VOWELS = ("a", "@", "i", "y")
RETURN_PHASE_RATIO = 0.02

GRID_F0 = tuple(range(60, 181, 20))
GRID_OQ = tuple(np.round(np.arange(0.40, 0.9001, 0.05), 2))
GRID_AM = tuple(np.round(np.arange(0.60, 0.9001, 0.05), 2))


@dataclass(frozen=True)
class LFParams:
    f0: float
    oq: float
    am: float
    ee: float = 1.0

    def __post_init__(self):
        if self.f0 <= 0:
            raise ParameterError(f"f0 must be positive, got {self.f0}")
        if not 0.0 < self.oq < 1.0:
            raise ParameterError(f"open quotient must lie in (0, 1), got {self.oq}")
        if not 0.5 < self.am < 1.0:
            raise ParameterError(f"asymmetry coefficient must lie in (0.5, 1), got {self.am}")
        if self.ee <= 0:
            raise ParameterError(f"ee must be positive, got {self.ee}")


@dataclass(frozen=True)
class VocalTractModel:
    vowel_label: str
    denominator: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.denominator, dtype=float)
        if a.ndim != 1 or a.size == 0 or a[0] == 0:
            raise ParameterError("denominator must be a 1-D polynomial with non-zero leading coefficient")
        if a.size > 1 and np.max(np.abs(np.roots(a))) >= 1.0:
            raise ParameterError(f"vocal tract /{self.vowel_label}/ has poles on or outside the unit circle")
        object.__setattr__(self, "denominator", a)


@dataclass(frozen=True)
class SyntheticUtterance:
    speech: SampleBuffer
    glottal_derivative_truth: SampleBuffer
    gci_samples: np.ndarray
    params: LFParams
    tract: VocalTractModel

    @property
    def period_samples(self) -> int:
        return period_samples(self.params.f0, self.speech.sample_rate)


def period_samples(f0: float, sample_rate: int) -> int:
    return int(np.floor(sample_rate / f0 + 0.5))


def _gci_sample(oq: float, period: int) -> int:
    return int(np.floor(oq * period + 0.5))


def _return_decay(ta: float, closed: float) -> float:
    """Solve ``eps * ta = 1 - exp(-eps * closed)`` for the return-phase rate."""
    if closed <= ta:
        raise NumericalError("return phase longer than the closed interval", ta=ta, closed=closed)

    def balance(eps):
        return eps * ta - 1.0 + np.exp(-eps * closed)

    lo = 1e-9 / ta
    hi = 1.0 / ta
    while balance(hi) <= 0:
        hi *= 2.0
    try:
        return brentq(balance, max(lo, 0.5 / ta), hi, xtol=1e-14, rtol=1e-12)
    except ValueError as exc:
        raise NumericalError("return-phase rate did not bracket", ta=ta, closed=closed) from exc


@lru_cache(maxsize=4096)
def _lf_shape(period: int, te: int, tp: float, ta: float):
    """Growth rate of the open phase balancing the sampled cycle area to zero."""
    closed = period - te
    eps = _return_decay(ta, closed)
    n_ret = np.arange(te + 1, period)
    ret = -(np.exp(-eps * (n_ret - te)) - np.exp(-eps * closed)) / (eps * ta)
    n_open = np.arange(te + 1)
    wg = np.pi / tp
    sin_open = np.sin(wg * n_open)
    sin_te = np.sin(wg * te)
    if sin_te >= 0:
        raise NumericalError("GCI does not fall on the negative lobe of the open phase", tp=tp, te=te)
    rel = n_open - te

    def area(alpha):
        return -np.sum(np.exp(alpha * rel) * sin_open) / sin_te + np.sum(ret)

    lo, hi = -1.0 / te, 1.0 / te
    for _ in range(200):
        if area(lo) > 0 > area(hi):
            break
        if area(lo) <= 0:
            lo *= 2.0
        if area(hi) >= 0:
            hi *= 2.0
    else:
        raise NumericalError("open-phase growth rate did not bracket", period=period, te=te, tp=tp)
    alpha = brentq(area, lo, hi, xtol=1e-15, rtol=1e-13, maxiter=500)
    residual = area(alpha)
    if abs(residual) > 1e-10 * period:
        raise NumericalError("area balance not reached", residual=residual, alpha=alpha)
    open_phase = -np.exp(alpha * rel) * sin_open / sin_te
    return np.concatenate([open_phase, ret]), alpha, eps


def lf_derivative_cycle(params: LFParams, sample_rate: int) -> np.ndarray:
    """One period of the LF glottal flow derivative.

    The open phase ends at the GCI (sample ``te``) with the value ``-ee``;
    the exponential return phase then brings the flow back to baseline so
    that the samples of the cycle sum to zero.
    """
    period = period_samples(params.f0, sample_rate)
    te = _gci_sample(params.oq, period)
    if not 2 <= te < period - 1:
        raise ParameterError(f"open phase of {te} samples does not fit a {period}-sample period")
    cycle, _, _ = _lf_shape(period, te, params.am * te, RETURN_PHASE_RATIO * period)
    return params.ee * cycle


def lf_open_phase(params: LFParams, sample_rate: int) -> np.ndarray:
    """Open phase of the derivative cycle, from glottal opening to the GCI inclusive."""
    period = period_samples(params.f0, sample_rate)
    te = _gci_sample(params.oq, period)
    return lf_derivative_cycle(params, sample_rate)[: te + 1]


@lru_cache(maxsize=None)
def formant_table() -> dict[str, list[tuple[float, float]]]:
    """Formant (frequency, bandwidth) pairs per vowel from the bundled data file."""
    table: dict[str, list[tuple[int, float, float]]] = {}
    text = resources.files("glottcc").joinpath("data/formants.tsv").read_text()
    for line in text.splitlines():
        if not line.strip() or line.startswith("#") or line.startswith("vowel"):
            continue
        vowel, index, freq, bw = line.split("\t")
        table.setdefault(vowel, []).append((int(index), float(freq), float(bw)))
    return {v: [(f, b) for _, f, b in sorted(rows)] for v, rows in table.items()}


def vocal_tract(vowel: str, sample_rate: int = 16000) -> VocalTractModel:
    """All-pole tract built as a cascade of second-order resonators."""
    table = formant_table()
    if vowel not in table:
        raise ParameterError(f"unknown vowel {vowel!r}; expected one of {sorted(table)}")
    a = np.array([1.0])
    for freq, bw in table[vowel]:
        if freq >= sample_rate / 2:
            continue
        r = np.exp(-np.pi * bw / sample_rate)
        theta = 2.0 * np.pi * freq / sample_rate
        a = np.convolve(a, [1.0, -2.0 * r * np.cos(theta), r * r])
    return VocalTractModel(vowel, a)


def filter_source(source, tract: VocalTractModel) -> np.ndarray:
    return lfilter([1.0], tract.denominator, np.asarray(source, dtype=float))


def synthesize(params: LFParams, tract: VocalTractModel, n_periods: int = 8, sample_rate: int = 16000) -> SyntheticUtterance:
    """Filter a train of ``n_periods`` identical LF derivative cycles through the tract.

    Lip radiation is folded into the source by synthesising the flow
    derivative directly.
    """
    if n_periods < 3:
        raise ParameterError(f"n_periods must be >= 3, got {n_periods}")
    cycle = lf_derivative_cycle(params, sample_rate)
    period = len(cycle)
    source = np.tile(cycle, n_periods)
    te = _gci_sample(params.oq, period)
    gcis = te + period * np.arange(n_periods)
    speech = filter_source(source, tract)
    return SyntheticUtterance(
        speech=SampleBuffer(speech, sample_rate),
        glottal_derivative_truth=SampleBuffer(source, sample_rate),
        gci_samples=gcis,
        params=params,
        tract=tract,
    )


def test_grid() -> list[tuple[LFParams, str]]:
    """Full Cartesian product of pitch, open quotient, asymmetry and vowel (2156 conditions)."""
    return [
        (LFParams(float(f0), float(oq), float(am)), vowel)
        for f0, oq, am, vowel in itertools.product(GRID_F0, GRID_OQ, GRID_AM, VOWELS)
    ]


# keep pytest from collecting the grid builder when imported into test modules
test_grid.__test__ = False
