"""Glottal source estimation by causal-anticausal decomposition of voiced speech.

Two interchangeable backends are provided: polynomial rooting of the frame
z-transform (:mod:`glottcc.zzt`) and the complex cepstrum
(:mod:`glottcc.cepstrum`).
"""

from .errors import FormatError, NumericalError, ParameterError, RangeError
from .signal import AnalysisFrame, SampleBuffer, WindowSpec, convolve, extract_frame, make_window

__version__ = "0.1.0"

__all__ = [
    "AnalysisFrame",
    "FormatError",
    "NumericalError",
    "ParameterError",
    "RangeError",
    "SampleBuffer",
    "WindowSpec",
    "convolve",
    "extract_frame",
    "make_window",
]
