"""Exception and warning types raised across the package."""


class EwarnError(Exception):
    """Base class for computation errors (CLI exit code 1)."""


class MatrixParseError(EwarnError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(EwarnError, ValueError):
    pass


class UndefinedCorrelationError(EwarnError, ValueError):
    """Pearson correlation requested for a constant sequence."""

    def __init__(self, message, indicator=None):
        super().__init__(message)
        self.indicator = indicator


class GroupTooSmallError(EwarnError, ValueError):
    pass


class NumericalFailure(EwarnError, ArithmeticError):
    """The damped normal equations stayed singular; ``trace`` holds progress so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class RankDeficientError(EwarnError, ValueError):
    pass


class ConstantColumnWarning(UserWarning):
    pass
