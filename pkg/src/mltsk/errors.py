"""Exception hierarchy shared by every module."""


class MlTskError(Exception):
    """Base class for all errors raised by mltsk."""


class ValidationError(MlTskError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(MlTskError, ValueError):
    """A file could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line number of the offending input line, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedAttributeError(ValidationError):
    """ARFF attribute type that cannot be used as a feature or label."""


class UnsupportedVersionError(MlTskError):
    """Model file written with a schema version this build cannot read."""


class DegenerateClusterError(MlTskError):
    """A cluster received zero total membership."""


class NumericalError(MlTskError, ArithmeticError):
    """A linear system or iteration failed numerically."""


class DivergenceError(NumericalError):
    """Solver produced a non-finite objective."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        super().__init__(message)
