"""Exception hierarchy shared across the toolkit.

Every error raised on purpose derives from :class:`VelvetKitError`, so the
CLI and the service can map failures to categorized messages and nonzero
exit codes / HTTP statuses without matching on builtins.
"""


class VelvetKitError(Exception):
    """Base class for all toolkit errors."""

    category = "error"


class SchemaError(VelvetKitError):
    """A dataset schema is inconsistent or does not match the input file."""

    category = "schema"


class RowError(VelvetKitError):
    """A data row could not be parsed; carries the 1-based row index."""

    category = "row"

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class JsonlError(VelvetKitError):
    """A JSONL line is malformed or misses a required key."""

    category = "jsonl"

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DomainError(VelvetKitError):
    """An operation precondition was violated (bad argument, empty input)."""

    category = "domain"


class AuthError(VelvetKitError):
    """The generation endpoint rejected our credentials; not retryable."""

    category = "auth"
