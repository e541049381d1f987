"""Exception types shared across the package."""


class LoglapError(Exception):
    """Base class for all package errors."""


class DomainError(LoglapError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PreconditionError(LoglapError, ValueError):
    """A hypothesis of a bound or a documented precondition does not hold."""


class UsageError(LoglapError, ValueError):
    """Inconsistent or malformed inputs (shapes, mismatched domains, windows)."""


class AccuracyError(LoglapError, RuntimeError):
    """A quadrature could not reach the requested tolerance.

    The best estimate obtained is attached as ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConvergenceError(LoglapError, RuntimeError):
    """An iterative solver stopped before all requested pairs converged.

    ``partial`` holds whatever was computed, with unconverged entries flagged.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
