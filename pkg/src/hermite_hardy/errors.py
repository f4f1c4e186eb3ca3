"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class AccuracyError(RuntimeError):
    """Requested accuracy not reached; ``estimate`` holds the achieved error."""

    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class RangeError(ArithmeticError):
    """Intermediate quantities leave the representable range."""


class CoverageError(ValueError):
    """A sampled object does not cover the region required by the operation."""


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


class ConjugateTruncationWarning(UserWarning):
    """Young conjugate supremum attained on the truncated search boundary."""
