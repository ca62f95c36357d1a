"""Exception types shared across the package."""


class EllipsarError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(EllipsarError):
    """Invalid acquisition, grid or scene configuration."""


class ModeError(EllipsarError):
    """Operation undefined for the configured trajectory mode."""


class SelectionError(EllipsarError):
    """No admissible cutoff width exists for the requested geometry."""


class FormatError(EllipsarError):
    """Malformed, truncated or inconsistent dataset file."""
