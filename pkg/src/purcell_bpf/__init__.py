"""Design and analysis of multi-stage bandpass Purcell filters.

Frequencies are angular (rad/s) throughout the library; the command-line
front end converts from and to Hz.
"""
from . import coupled_mode, prototype, purcell, tline
from ._backend import BACKEND
from .errors import (
    BroadeningRequiredError,
    CalibrationError,
    DomainError,
    FitError,
    HybridizationError,
    InsufficientDataError,
    PurcellFilterError,
    RealizationError,
    SingularityError,
    StabilityError,
    SynthesisError,
)
from .prototype import FilterSpec, PrototypeCoefficients, synth_maximally_flat

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BroadeningRequiredError",
    "CalibrationError",
    "DomainError",
    "FilterSpec",
    "FitError",
    "HybridizationError",
    "InsufficientDataError",
    "PrototypeCoefficients",
    "PurcellFilterError",
    "RealizationError",
    "SingularityError",
    "StabilityError",
    "SynthesisError",
    "__version__",
    "coupled_mode",
    "prototype",
    "purcell",
    "synth_maximally_flat",
    "tline",
]
