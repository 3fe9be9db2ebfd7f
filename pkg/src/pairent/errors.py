"""Exception hierarchy shared by the library and the command line."""


class PairentError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(PairentError, ValueError):
    """Invalid input: bad arguments, malformed specs, mismatched shapes."""


class UnsupportedError(UsageError):
    """Operation is not defined for the given local dimension or register."""


class ParseError(UsageError):
    """Malformed ket expression. ``position`` is a 0-based offset; messages show it 1-based."""

    def __init__(self, message, text="", position=None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at column {position + 1}"
            if text:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class NumericError(PairentError, ArithmeticError):
    """A numerical post-condition could not be met."""


class NotPSDError(NumericError):
    def __init__(self, eigenvalue):
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"matrix is not positive semidefinite (eigenvalue {self.eigenvalue:.3e})")


class ConvergenceError(NumericError):
    def __init__(self, message, residual=float("nan")):
        self.residual = float(residual)
        super().__init__(f"{message} (residual {self.residual:.3e})")
