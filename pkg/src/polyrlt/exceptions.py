class PolyRLTError(Exception):
    """Base class for all errors raised by polyrlt."""


class NotSubmultiset(PolyRLTError, ValueError):
    pass


class DimensionMismatch(PolyRLTError, ValueError):
    pass


class ProblemSyntaxError(PolyRLTError, ValueError):
    """Malformed problem file; carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}" if line else message)


class NegativeLowerBound(PolyRLTError, ValueError):
    pass


class EmptyObjective(PolyRLTError, ValueError):
    pass


class UnknownVariable(PolyRLTError, ValueError):
    pass


class InvalidConfig(PolyRLTError, ValueError):
    pass


class UnboundedKey(PolyRLTError, ValueError):
    pass


class ResourceLimit(PolyRLTError, RuntimeError):
    """A scheme would generate more variables than the configured cap."""


class NumericalFailure(PolyRLTError, ArithmeticError):
    pass


class NoIncumbent(PolyRLTError, ValueError):
    pass


class NoViolation(PolyRLTError):
    """The LP point satisfies every RLT identity within tolerance."""
