"""Exception types shared across the package."""


class ScratchLMError(Exception):
    """Base class for all package errors."""


class MalformedArchive(ScratchLMError):
    """The input is not a ZIP archive or lacks a project.json entry."""


class MalformedProgram(ScratchLMError):
    """project.json is unreadable or its block graph is inconsistent."""


class UnknownToken(ScratchLMError):
    """A token id or opcode outside the closed vocabulary."""


class EmptyCorpus(ScratchLMError):
    """No tokens were seen while counting n-grams."""


class OrderMismatch(ScratchLMError):
    """Count tables of different order or vocabulary cannot be merged."""


class FormatVersionMismatch(ScratchLMError):
    """A persisted file carries an unsupported format version."""


class CorruptModel(ScratchLMError):
    """A model file failed integrity checks."""


class EmptyRecords(ScratchLMError):
    """A metric was requested over zero prediction records."""


class DegenerateSample(ScratchLMError):
    """A statistical test received an empty sample."""


class ZeroTotal(ScratchLMError):
    """A ratio was requested with a zero denominator."""


class FetchError(ScratchLMError):
    """Base class for project download failures."""


class NotFound(FetchError):
    """The remote endpoint does not know the requested project."""


class RateLimited(FetchError):
    """The remote endpoint kept throttling after all retries."""


class NetworkError(FetchError):
    """Transport-level failure while talking to the remote endpoint."""
