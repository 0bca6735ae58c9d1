"""Exception taxonomy shared across the package.

CLI exit codes: ValidationError and ParseError map to exit code 1,
everything else that escapes maps to exit code 2.
"""


class TextregenError(Exception):
    """Base class for all package errors."""


class ParseError(TextregenError):
    """Malformed input file (bad JSONL line, bad config, bad TSV row)."""


class ValidationError(TextregenError):
    """Input violates a documented precondition or invariant."""


class ContractError(TextregenError):
    """An API was called in a way its contract forbids (caller bug)."""


class ProtocolError(TextregenError):
    """Remote predictor sent something the wire protocol forbids."""


class PredictorError(TextregenError):
    """A predictor failed at query time (connection loss, timeout, ...)."""


class DecodeError(TextregenError):
    """Generation aborted mid-decode; carries the partial step trace."""

    def __init__(self, message, partial_steps=None):
        super().__init__(message)
        self.partial_steps = list(partial_steps) if partial_steps else []
