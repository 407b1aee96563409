"""Exception types shared across the toolkit."""


class ObbkitError(Exception):
    """Base class for all toolkit errors."""

    code = "E_INTERNAL"


class DomainError(ObbkitError, ValueError):
    """An argument is outside the mathematical domain of an operation."""

    code = "E_DOMAIN"


class GeometryError(ObbkitError, ValueError):
    """Degenerate or invalid geometric input."""

    code = "E_GEOMETRY"


class ConfigError(ObbkitError, ValueError):
    """Invalid configuration value or combination."""

    code = "E_CONFIG"


class ParseError(ObbkitError, ValueError):
    """Malformed text input; carries the 1-based line number."""

    code = "E_PARSE"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
