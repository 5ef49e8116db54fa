"""Exception hierarchy shared by every stage of the pipeline."""


class BistochasticError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class InputError(BistochasticError, ValueError):
    """Malformed or out-of-range input (shapes, parameters, files)."""

    exit_code = 1


class ParseError(InputError):
    """A data or config file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedProfileError(InputError):
    """Operation requires the Gaussian kernel profile."""


class UnsupportedDimensionError(InputError):
    """Operation is restricted to a particular ambient dimension."""


class ConvergenceError(BistochasticError):
    """An iterative solver stopped before reaching its tolerance.

    The partially converged result is attached as ``result``.
    """

    exit_code = 2

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NumericError(BistochasticError, ArithmeticError):
    """Non-finite values, underflow, or a failed factorization."""

    exit_code = 3


class ConditioningError(NumericError):
    """An eigenvalue is too small to divide by safely."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RankDeficiencyError(NumericError):
    """Column selection ran out of independent columns."""

    def __init__(self, message, selected=None):
        super().__init__(message)
        self.selected = selected
