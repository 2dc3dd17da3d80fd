class DriftIndexError(Exception):
    """Base class for errors raised by driftindex."""


class ConfigError(DriftIndexError, ValueError):
    """Invalid configuration or parameters (CLI exit code 1)."""


class DataError(DriftIndexError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class QueryError(DriftIndexError, ValueError):
    """A query that cannot be evaluated against the index."""
