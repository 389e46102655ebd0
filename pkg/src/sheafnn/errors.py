"""Exception types raised across the package."""


class SheafNNError(Exception):
    """Base class for all package errors."""


class ShapeError(SheafNNError, ValueError):
    """Operand shapes do not conform."""


class ContractError(SheafNNError, ValueError):
    """A precondition on the input was violated."""


class NumericError(SheafNNError, ArithmeticError):
    """A computation failed to converge or produced non-finite values."""


class ParseError(SheafNNError, ValueError):
    """Malformed input file."""
