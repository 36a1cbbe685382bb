"""Copula estimation for continuous, discrete and mixed margins."""

from .copulas import CopulaSpec, Family
from .errors import (
    ConfigurationError,
    DataError,
    DomainError,
    ExtrapolationError,
    GridTooLargeError,
    InvalidParameterError,
    NonConvergenceError,
    RangeError,
    StepSizeError,
    TiecopError,
    UnsupportedError,
)

__version__ = "0.1.0"

__all__ = [
    "CopulaSpec",
    "Family",
    "ConfigurationError",
    "DataError",
    "DomainError",
    "ExtrapolationError",
    "GridTooLargeError",
    "InvalidParameterError",
    "NonConvergenceError",
    "RangeError",
    "StepSizeError",
    "TiecopError",
    "UnsupportedError",
]
