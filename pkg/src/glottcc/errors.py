"""Exception hierarchy shared by all modules."""


class GlottccError(Exception):
    """Base class for package errors."""


class ParameterError(GlottccError, ValueError):
    """Invalid argument value."""


class RangeError(GlottccError, IndexError):
    """Requested region falls outside the signal."""


class NumericalError(GlottccError, ArithmeticError):
    """A numerical routine failed (non-convergence, spectral zero, overflow)."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class FormatError(GlottccError):
    """Input file is malformed or uses an unsupported encoding."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
