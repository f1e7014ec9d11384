"""Exception hierarchy shared across the toolkit."""


class AakitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(AakitError, ValueError):
    """Operand shapes are incompatible."""


class DataError(AakitError, ValueError):
    """Input data is invalid (non-finite entries, empty columns, ...)."""


class ParameterError(AakitError, ValueError):
    """A configuration value is out of range."""


class NumericError(AakitError, RuntimeError):
    """A numerical procedure failed (rank deficiency, non-convergence)."""


class FormatError(AakitError, ValueError):
    """A persisted file has an unrecognized or corrupt layout."""


class ParseError(AakitError, ValueError):
    """Delimited-text input could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DeadArchetypeError(AakitError, ValueError):
    """An archetype has zero usage, so its update is undefined."""
