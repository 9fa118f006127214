"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class LdaSelectError(Exception):
    """Base class for all package errors."""


class ValidationError(LdaSelectError, ValueError):
    """Invalid input data, configuration or dimensions."""


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(LdaSelectError, ArithmeticError):
    """A numerical procedure failed (non-convergence, precision exhaustion, -inf)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
