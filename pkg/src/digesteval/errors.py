"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, BackendError -> 2,
DataError -> 3. Everything else bubbles up unchanged.
"""

from __future__ import annotations


class DigestEvalError(Exception):
    """Base class for all package errors."""


class ConfigError(DigestEvalError):
    """Invalid experiment configuration (bad value, missing key, k > universe)."""


class DataError(DigestEvalError):
    """Problems with input data files."""


class MissingFileError(DataError):
    pass


class RowParseError(DataError):
    """A single input row failed to parse or violated a type invariant."""

    def __init__(self, source: str, row: int, reason: str):
        self.source = source
        self.row = row
        self.reason = reason
        super().__init__(f"{source} row {row}: {reason}")


class UnknownTickerError(DataError):
    """A ticker code absent from the universe."""


class DuplicateRecordError(DataError):
    """Two rows claim the same key (ticker-day, company code, article id)."""


class NonPositiveBasisError(DigestEvalError):
    pass


class EmptyDayError(DigestEvalError):
    """A trading day carries no price records."""


class MissingTranscriptError(DigestEvalError):
    pass


class ExtractorUnavailableError(DigestEvalError):
    """External entity-extraction backend failed; caller may fall back."""


class EmptyCandidatesError(DigestEvalError):
    pass


class KindMismatchError(DigestEvalError):
    pass


class DateMismatchError(DigestEvalError):
    pass


class BackendError(DigestEvalError):
    """Base for generator/agent backend failures."""


class BackendTimeoutError(BackendError):
    pass


class EmptyCompletionError(BackendError):
    pass


class BudgetExceededError(BackendError):
    """Retry budget exhausted on transient backend failures."""


class UnparseableReplyError(DigestEvalError):
    """Agent reply lacked the mandated BUY:/SELL: lines, even after a retry."""


class DateOutOfRangeError(DigestEvalError):
    pass


class DanglingDigestReferenceError(DigestEvalError):
    """A decision references a digest id absent from the digest index."""


class UnknownAnnotatorError(DigestEvalError):
    pass


class UnknownTaskError(DigestEvalError):
    pass


class DuplicateSubmissionError(DigestEvalError):
    pass


class InvalidDecisionError(DigestEvalError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class InvalidRatesError(ConfigError):
    pass
