"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems -> 1, data problems -> 2,
anything else -> 3.
"""


class TripcastError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(TripcastError):
    """Bad invocation: unknown model name, invalid flag combination, ..."""


class DataError(TripcastError):
    """Input data cannot be used: missing file, bad schema, empty table, ..."""


class InsufficientSpanError(DataError):
    """The feature table does not cover enough time for the requested scenario."""


class PersistError(DataError):
    """A persisted model document is missing, corrupted, or incompatible."""
