"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
InternalError -> 3.
"""


class OvcpError(Exception):
    """Base class for all package errors."""


class UsageError(OvcpError):
    """Invalid invocation or out-of-range argument."""


class DataError(OvcpError):
    """Input data (records, configs, model files) failed validation."""


class TrainingError(DataError):
    """Training diverged or was fed unusable data."""


class InternalError(OvcpError):
    """An internal invariant was violated; indicates a bug."""
