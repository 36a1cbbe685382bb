"""Exception hierarchy shared by every tiecop module."""


class TiecopError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(TiecopError, ValueError):
    """Copula parameter outside its admissible box."""


class DomainError(TiecopError, ValueError):
    """Evaluation point outside the domain of the requested quantity."""


class StepSizeError(TiecopError, ValueError):
    """Finite-difference step cannot be placed inside the parameter box."""


class RangeError(TiecopError, ValueError):
    """Kendall's tau not attainable by the family."""


class DataError(TiecopError, ValueError):
    """Input data is empty, non-finite or otherwise unusable."""


class ConfigurationError(TiecopError, ValueError):
    """Incompatible options, e.g. informed mode without atom declarations."""


class UnsupportedError(TiecopError, NotImplementedError):
    """Requested operation is not available for this family or dimension."""


class NonConvergenceError(TiecopError, RuntimeError):
    """No optimizer start converged.  ``best`` carries the best-so-far fit."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class GridTooLargeError(TiecopError, ValueError):
    """Identifiability grid exceeds the configured size cap."""


class ExtrapolationError(TiecopError, ValueError):
    """Evaluation requested outside the support of a smoothed distribution."""
