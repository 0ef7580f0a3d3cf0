"""Exception hierarchy shared by the library and the CLI."""


class RssMapError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ValidationError(RssMapError, ValueError):
    """Input data or configuration violates an invariant."""


class FormatError(RssMapError, ValueError):
    """A file could not be parsed.

    ``line`` is the 1-based line number the problem was found on, if known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(RssMapError, ArithmeticError):
    """A numerical operation is undefined for the given data."""

    exit_code = 3
