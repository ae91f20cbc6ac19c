"""Exception types shared across the toolkit.

The CLI maps these to stable exit codes: DataError -> 1, OSError -> 2,
ConfigError and SchemaError -> 3.
"""


class MremixError(Exception):
    """Base class for toolkit errors."""


class DataError(MremixError):
    """A data file or record violates the toolkit's contracts."""


class SchemaError(MremixError):
    """A label schema is unknown, malformed, or used where it cannot be."""


class ConfigError(MremixError):
    """An experiment configuration or CLI invocation is invalid."""


class SerializationError(MremixError):
    """Structured data cannot be rendered in the canonical text grammar."""
