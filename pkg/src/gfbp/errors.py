"""Exception hierarchy shared by all gfbp modules."""


class GfbpError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(GfbpError, ValueError):
    """An argument is outside its admissible range."""


class ShapeError(GfbpError, ValueError):
    """Array dimensions are inconsistent."""


class EstimationError(GfbpError, RuntimeError):
    """An iterative estimate did not reach its tolerance.

    The best estimate seen so far is kept on ``best``.
    """

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class DivergenceError(GfbpError, ArithmeticError):
    """The iteration produced non-finite values."""

    def __init__(self, message, k=None, block=None):
        super().__init__(message)
        self.k = k
        self.block = block


class FormatError(GfbpError, ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        if row is not None:
            where = f"row {row}" if column is None else f"row {row}, column {column}"
            message = f"{message} ({where})"
        super().__init__(message)
        self.row = row
        self.column = column


class UnsupportedInstanceError(GfbpError):
    """The requested oracle cannot handle this instance."""
