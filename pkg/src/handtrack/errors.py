"""Exception hierarchy shared across the package.

CLI exit codes hang off these: SchemaError/ConfigError exit 2, DataError
exit 3 (see cli.main).
"""


class HandtrackError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(HandtrackError):
    """A file does not conform to one of the documented formats."""


class ConfigError(HandtrackError):
    """Invalid or inconsistent run configuration."""


class DataError(HandtrackError):
    """Inputs parse but are mutually inconsistent (missing records, id mismatches...)."""
