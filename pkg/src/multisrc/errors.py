"""Package-wide exception types, mapped to CLI exit codes."""


class MultisrcError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class UsageError(MultisrcError):
    """Bad invocation: unknown verb, missing flag, inconsistent options."""

    exit_code = 1


class DataError(MultisrcError):
    """Invalid or inconsistent input data."""

    exit_code = 2


class ConlluParseError(DataError):
    """Malformed CoNLL-U input; carries the offending line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NumericError(MultisrcError):
    """Numerical failure (NaN/Inf gradients, degenerate decompositions)."""

    exit_code = 3
