"""Simulation of interferometric QND measurement of a cold-atom pseudo-spin."""
from __future__ import annotations

from .errors import ConfigError, NumericalError, QndsimError
from .optics import D2LineModel, EnsembleParams, load_model
from .wigner import HalfInt, wigner_6j

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "D2LineModel",
    "EnsembleParams",
    "HalfInt",
    "NumericalError",
    "QndsimError",
    "load_model",
    "wigner_6j",
    "__version__",
]
