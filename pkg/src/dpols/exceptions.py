"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI: ``InvalidInputError`` -> 2,
``InfeasibleRegimeError`` -> 3, ``DegenerateFitError`` -> 4.
"""


class DpolsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DpolsError, ValueError):
    """Malformed data, parameters outside their domain, shape mismatches."""


class InvalidParameterError(InvalidInputError):
    """A scalar parameter outside its documented domain (k < 1, q not in (0,1), ...)."""


class RowBoundViolationError(InvalidInputError):
    """One or more rows exceed the declared row norm bound.

    Carries the offending row indices; clipping is opt-in, never silent.
    """

    def __init__(self, indices, bound):
        self.indices = list(indices)
        self.bound = bound
        head = ", ".join(str(i) for i in self.indices[:10])
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(
            f"{len(self.indices)} row(s) exceed the declared norm bound {bound!r}: "
            f"rows [{head}]{more}; pass clip=True to rescale instead"
        )


class UnderdeterminedSystemError(InvalidInputError):
    """Fewer observations than coefficients."""


class InsufficientRowsError(InvalidInputError):
    """A sketch with too few rows for the requested inference (needs r > p)."""


class WrongPathError(InvalidInputError):
    """A release routed to the wrong inference path (altered vs unaltered)."""


class SingularMatrixError(DpolsError, ValueError):
    """A matrix that must be invertible is numerically singular.

    ``smallest_pivot`` records the smallest eigenvalue / pivot encountered.
    """

    def __init__(self, message, smallest_pivot=None):
        self.smallest_pivot = smallest_pivot
        if smallest_pivot is not None:
            message = f"{message} (smallest pivot {smallest_pivot:.6g})"
        super().__init__(message)


class NotPositiveDefiniteError(SingularMatrixError):
    """A released second-moment matrix is not positive definite."""


class DegenerateFitError(DpolsError, ValueError):
    """Zero residual: the scale estimate collapses and t-values are undefined."""


class UndefinedPowerError(InvalidInputError):
    """Power calculations are undefined when the tested coefficient is zero."""


class InfeasibleRegimeError(DpolsError, RuntimeError):
    """No sketch size satisfies the requested constraints.

    ``failed`` lists which constraint(s) could not be met.
    """

    def __init__(self, message, failed=()):
        self.failed = list(failed)
        if self.failed:
            message = f"{message}; failed: {', '.join(self.failed)}"
        super().__init__(message)


class PreconditionFailedError(DpolsError, RuntimeError):
    """A theorem precondition (spectral margin, sample size) does not hold."""


class DiagnosticUnavailableError(DpolsError, RuntimeError):
    """A diagnostic-only computation was requested without its oracle inputs."""
