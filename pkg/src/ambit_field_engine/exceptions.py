class AmbitError(Exception):
    """Base exception for all Ambit Field Engine errors."""


class InvalidParameterError(AmbitError):
    """Raised when a parameter lies outside its documented domain."""


class NumericalFailureError(AmbitError):
    """Raised when a quadrature or extrapolation does not converge.

    The best estimate reached before giving up is kept on ``partial_estimate``
    and the refinement history on ``trace``.
    """

    def __init__(self, message: str, partial_estimate=None, trace=None):
        super().__init__(message)
        self.partial_estimate = partial_estimate
        self.trace = list(trace) if trace is not None else []


class UnsupportedLawError(AmbitError):
    """Raised when a sampling or evaluation path is not available for a law."""


class UnclassifiableRegimeError(AmbitError):
    """Raised when a triplet falls outside the Gaussian, stable and classical regimes."""


class DomainError(AmbitError):
    """Raised when an operation is evaluated outside its domain."""


class GeometryError(AmbitError):
    """Raised when a shape is invalid or boundary components collide."""


class WindowRangeError(AmbitError):
    """Raised when an evaluation needs noise outside the realization window."""


class ConfigError(AmbitError):
    """Raised when an experiment configuration is invalid."""
