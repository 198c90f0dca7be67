"""Exception types shared across the package."""


class PropdetectError(Exception):
    """Base class for all package errors."""


class ParseError(PropdetectError):
    """Input file violates its documented schema."""


class DataError(PropdetectError):
    """Inputs are well-formed but semantically unusable (empty cohort,
    missing overlap window, non-finite vector, ...)."""


class FormatError(PropdetectError):
    """Binary/serialized artifact fails magic, header, or length checks."""


class SchemaMismatchError(PropdetectError):
    """Model was trained against a different feature schema or embedding dim."""


class ConfigError(PropdetectError):
    """Invalid configuration value or combination."""
