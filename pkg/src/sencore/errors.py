"""Exception types that map onto CLI exit codes."""


class DataError(Exception):
    """Unreadable, malformed, or semantically invalid input data (exit 2)."""


class NumericError(Exception):
    """Non-finite values where the run cannot continue (exit 3)."""
