"""Exception hierarchy for discrete-tomo.

Infeasible data is not an error: solvers report it through their result
objects.  Exceptions are reserved for malformed input and exceeded guards.
"""


class TomographyError(Exception):
    """Base class for all discrete-tomo errors."""


class DimensionMismatchError(TomographyError, ValueError):
    """Operands live in lattices of different dimension or have unequal sizes."""


class InvalidDirectionError(TomographyError, ValueError):
    """A direction is zero, repeated, parallel to another or otherwise unusable."""


class GuardExceededError(TomographyError):
    """An exponential-time search was asked to run above its configured size guard."""

    def __init__(self, name: str, size: int, limit: int) -> None:
        self.name = name
        self.size = size
        self.limit = limit
        super().__init__(
            f"{name} = {size} exceeds the guard of {limit} "
            "(set TOMO_GUARD_OVERRIDE=1 to lift brute-force guards)"
        )


class InstanceSchemaError(TomographyError, ValueError):
    """An input document or environment value does not follow the expected schema."""

    def __init__(self, message: str, field: str = "", line: int | None = None) -> None:
        self.field = field
        self.line = line
        location = ""
        if field:
            location = f" at {field}"
        if line is not None:
            location += f" (line {line})"
        super().__init__(f"{message}{location}")


class UnverifiedPairError(TomographyError, ValueError):
    """A switching pair does not have equal X-rays for its own directions."""


class NotPositiveDefiniteError(TomographyError, ValueError):
    """A GBPD matrix is not symmetric positive definite."""


class InvariantViolationError(TomographyError, AssertionError):
    """Two independent computations of the same quantity disagree."""
