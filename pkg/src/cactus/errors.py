"""Exception hierarchy shared across the pipeline."""


class CactusError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CactusError):
    """Malformed or schema-violating run configuration."""


class DataError(CactusError):
    """Invalid input data or an operation applied to an unusable table."""


class GraphError(CactusError):
    """Degenerate graph state (e.g. no usable significance scores)."""
