"""Exception types shared across the package."""


class LyapchiError(Exception):
    """Base class for library errors."""


class ParameterError(LyapchiError, ValueError):
    """A built-in map parameter is out of range or a config value is invalid."""


class NotExpanding(ParameterError):
    """The certified lower bound of f' is not above 1."""


class InconsistentMap(ParameterError):
    """Lift, derivative and degree of a custom map disagree."""


class ConvergenceFailure(LyapchiError, ArithmeticError):
    """An iterative solver did not reach its tolerance."""


class CapExceeded(LyapchiError):
    """The requested enumeration is larger than the configured cap."""


class ResolutionError(LyapchiError, ArithmeticError):
    """The Fourier truncation does not resolve the leading eigendata."""


class DegenerateVariance(LyapchiError):
    """Asymptotic variance is numerically zero (map conjugate to linear)."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DegenerateSigma(LyapchiError, ValueError):
    """Normalization requested with a vanishing sigma."""


class EmptyDistribution(LyapchiError, ValueError):
    pass


class DegenerateRange(LyapchiError, ValueError):
    """All sample values coincide, so equal-width bins are undefined."""
