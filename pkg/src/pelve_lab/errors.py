"""Exception types shared across the package."""


class PelveError(Exception):
    """Base class for library errors."""


class DomainError(PelveError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(PelveError, ValueError):
    """A model parameter is invalid (e.g. a GPD shape with no finite mean)."""


class IntegrabilityError(PelveError):
    """The tail of a quantile curve is not integrable."""


class ConvergenceError(PelveError):
    """A numerical routine stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedModelError(PelveError):
    """The model lacks a property the operation needs (density, strictness)."""


class InfeasibleConstraintError(PelveError):
    """A PELVE constraint cannot be met by any model."""


class ConstructionError(PelveError):
    """A constructed curve failed its own verification."""


class InvalidZCurveError(PelveError, ValueError):
    """The z-curve is out of range or y*z(y) is not strictly increasing."""


class DegenerateZError(PelveError):
    """z(1) >= 1, so the stepping scheme cannot advance."""


class SolverFailureError(PelveError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class MonotonicityError(PelveError):
    """Coefficients would produce a curve that is not strictly decreasing."""


class PreconditionError(PelveError):
    """The input does not satisfy a precondition of a diagnostic."""
