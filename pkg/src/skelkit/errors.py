"""Exception taxonomy shared across the toolkit.

The CLI maps these to exit codes: InputError -> 1, DataError -> 2,
VerifyError -> 3.
"""


class SkelkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(SkelkitError):
    """Invalid arguments, configuration, or in-memory preconditions."""


class DataError(SkelkitError):
    """Missing, malformed, or inconsistent on-disk data."""


class VerifyError(SkelkitError):
    """A persisted skeleton violates a structural invariant."""
