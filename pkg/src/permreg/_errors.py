"""Exception hierarchy shared by every module."""


class PermregError(Exception):
    """Base class for all errors raised by permreg."""


class InvalidInputError(PermregError, ValueError):
    pass


class DegenerateDataError(PermregError, ValueError):
    pass


class NumericalError(PermregError, ArithmeticError):
    """Factorization failure. ``pivot`` is the 1-based index of the failing minor."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ContractViolationError(PermregError, ValueError):
    pass


class NondifferentiableError(PermregError, ArithmeticError):
    """Raised when a residual norm or an absolute-value argument sits at a kink."""


class DivergedError(PermregError, ArithmeticError):
    pass


class CSVParseError(PermregError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
