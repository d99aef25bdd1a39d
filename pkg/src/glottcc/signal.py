"""Signal containers, the two-cosine window family and GCI-centred framing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError

ALPHA_MIN = 0.7
ALPHA_MAX = 1.0
MIN_WINDOW_LENGTH = 8


@dataclass(frozen=True)
class SampleBuffer:
    """Uniformly sampled real signal."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("samples contain NaN or Inf")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class WindowSpec:
    alpha: float
    length: int

    def __post_init__(self):
        if not ALPHA_MIN <= self.alpha <= ALPHA_MAX:
            raise ParameterError(
                f"alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {self.alpha}"
            )
        if int(self.length) != self.length or self.length < MIN_WINDOW_LENGTH:
            raise ParameterError(f"window length must be an integer >= {MIN_WINDOW_LENGTH}, got {self.length}")
        object.__setattr__(self, "length", int(self.length))


@dataclass(frozen=True)
class AnalysisFrame:
    """Windowed segment with the GCI at ``gci_index``.

    For even lengths the GCI sits at ``(N - 1) // 2``, half a sample left of
    the geometric window centre.
    """

    windowed_samples: np.ndarray
    gci_index: int
    period_samples: int
    window: WindowSpec
    sample_rate: int

    def __len__(self):
        return len(self.windowed_samples)


def make_window(spec: WindowSpec) -> np.ndarray:
    """Two-cosine window ``alpha/2 - cos(2 pi n/(N-1))/2 + (1-alpha)/2 cos(4 pi n/(N-1))``.

    ``alpha=1`` is the Hanning window and ``alpha=0.84`` approximately the
    Blackman window. Both endpoints are exactly zero. For ``alpha < 0.75``
    the window dips slightly below zero next to its endpoints (down to
    -1/120 at ``alpha=0.7``); it is returned unclipped.
    """
    if not isinstance(spec, WindowSpec):
        raise ParameterError("make_window expects a WindowSpec")
    n_pts = spec.length
    phase = 2.0 * np.pi * np.arange(n_pts) / (n_pts - 1)
    w = spec.alpha / 2.0 - 0.5 * np.cos(phase) + (1.0 - spec.alpha) / 2.0 * np.cos(2.0 * phase)
    # cos() does not return exactly 1 at the endpoints for every N
    w[0] = w[-1] = 0.0
    # enforce exact symmetry against rounding in the phase grid
    return 0.5 * (w + w[::-1])


def frame_length(period_samples: float, periods: float) -> int:
    return int(np.floor(periods * period_samples + 0.5))


def extract_frame(
    signal: SampleBuffer,
    gci_sample: int,
    period_samples: int,
    alpha: float = 0.7,
    periods: float = 2.0,
) -> AnalysisFrame:
    """Cut a window of ``round(periods * period_samples)`` samples centred on a GCI.

    Raises
    ------
    RangeError
        If the window does not fit entirely inside the signal. Frames near the
        edges are never zero-padded.
    """
    if period_samples <= 0:
        raise ParameterError(f"period_samples must be positive, got {period_samples}")
    if periods <= 0:
        raise ParameterError(f"periods must be positive, got {periods}")
    spec = WindowSpec(alpha, frame_length(period_samples, periods))
    centre = (spec.length - 1) // 2
    start = int(gci_sample) - centre
    stop = start + spec.length
    if start < 0 or stop > len(signal.samples):
        raise RangeError(
            f"window [{start}, {stop}) around GCI {gci_sample} exceeds signal of length {len(signal.samples)}"
        )
    return AnalysisFrame(
        windowed_samples=signal.samples[start:stop] * make_window(spec),
        gci_index=centre,
        period_samples=int(period_samples),
        window=spec,
        sample_rate=signal.sample_rate,
    )


def convolve(a, b) -> np.ndarray:
    """Full linear convolution, length ``len(a) + len(b) - 1``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        raise ParameterError("convolve requires non-empty inputs")
    return np.convolve(a, b)
