"""Shared exception types. The CLI maps these onto process exit codes."""


class GclabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GclabError):
    """Bad or inconsistent run configuration (exit code 2)."""


class DataError(GclabError):
    """Unreadable or malformed dataset input (exit code 3)."""


class DimensionError(GclabError):
    """Shape mismatch between arrays that must align."""


class NumericsError(GclabError):
    """NaN/Inf appeared in a computation (exit code 4)."""
