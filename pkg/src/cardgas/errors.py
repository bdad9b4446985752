"""Exception hierarchy shared by all cardgas modules."""


class CardGasError(Exception):
    """Base class for every error raised by this package."""


class IndexOutOfRange(CardGasError, IndexError):
    pass


class ControlTargetOverlap(CardGasError, ValueError):
    pass


class QubitLimitExceeded(CardGasError, ValueError):
    pass


class InvalidIndices(CardGasError, ValueError):
    pass


class CardinalityOutOfRange(CardGasError, ValueError):
    pass


class RangeViolation(CardGasError, ValueError):
    """A value f(x) - y does not fit the two's-complement ancilla window."""


class PrecisionOverflow(CardGasError, OverflowError):
    pass


class InvalidCounts(CardGasError, ValueError):
    pass


class BudgetExhausted(CardGasError):
    """Raised only on request; GAS normally flags exhaustion in its result."""

    def __init__(self, message, incumbent=None, value=None):
        super().__init__(message)
        self.incumbent = incumbent
        self.value = value


class DimensionMismatch(CardGasError, ValueError):
    pass


class TooLarge(CardGasError, ValueError):
    pass


class NotSquare(CardGasError, ValueError):
    pass


class InvalidTolerance(CardGasError, ValueError):
    pass


class SingularSystem(CardGasError, ArithmeticError):
    pass


class ValidationError(CardGasError, ValueError):
    pass


class UnsupportedDegree(CardGasError, ValueError):
    pass
