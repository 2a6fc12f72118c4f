"""Exception types shared across the package."""


class TubeGeoError(Exception):
    """Base class for all package errors."""


class ArgumentError(TubeGeoError, ValueError):
    """Invalid argument (zero vector, point outside a model, w == z, ...)."""


class DomainError(TubeGeoError, ValueError):
    """A point or configuration is inconsistent with the base domain."""


class DegenerateParamsError(TubeGeoError, ValueError):
    """Geodesic parameters for which the direction map is constant."""


class NumericError(TubeGeoError, RuntimeError):
    """An iterative solver did not converge.

    ``residual`` carries the best residual reached, when known.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuadratureError(NumericError):
    """Estimated quadrature error above the requested tolerance."""

    def __init__(self, message, estimate):
        super().__init__(message, residual=estimate)
        self.estimate = estimate
