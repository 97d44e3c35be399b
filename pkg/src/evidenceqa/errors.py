"""Exception hierarchy shared across the toolkit.

Two broad families matter for the CLI exit-code mapping: ValidationError
(bad data or configuration, exit 1) and EndpointError (a remote endpoint
failed or produced unusable output, exit 2).
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToolkitError):
    """Invalid data, configuration, or arguments."""


class EmptyAnswerError(ValidationError):
    """Answer text is empty or whitespace-only."""


class MalformedLineError(ValidationError):
    """A corpus line failed to parse; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateIdError(ValidationError):
    """Two records in one corpus share an id."""


class TierInvariantError(ValidationError):
    """A record violates the invariants of its corpus tier."""


class UnknownRelevanceError(ValidationError):
    """An operation requiring relevance labels met an unlabeled source."""


class UnscoredRecordError(ValidationError):
    """An operation requiring scores met an unscored record."""


class MissingVerdictError(ValidationError):
    """A format-correct sentence lacks an entailment verdict."""


class NoApplicableRecordsError(ValidationError):
    """A corpus metric was requested but no record is applicable."""


class PoolExhaustedError(ValidationError):
    """The cross-topic source pool cannot supply the requested draw."""


class EndpointError(ToolkitError):
    """A remote endpoint failed; whether a retry may help is class-level."""

    retryable = False


class EndpointTimeoutError(EndpointError):
    retryable = True


class RateLimitedError(EndpointError):
    retryable = True


class ServerError(EndpointError):
    """Transient 5xx from the endpoint."""

    retryable = True


class MalformedResponseError(EndpointError):
    """The endpoint answered, but not in the agreed shape."""


class BudgetExhaustedError(EndpointError):
    """Retry budget spent without a usable response."""


class EmptyParseError(EndpointError):
    """A completion parsed to zero usable items."""


class TranscriptMissError(EndpointError):
    """Replay-only client was asked for a request not in the transcripts."""
