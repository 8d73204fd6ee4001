"""Exception taxonomy shared across the package."""


class HfoError(Exception):
    """Base class for all package errors."""


class UnfinishedJob(HfoError):
    """A labeling operation was applied to a job without end_time/exit_code."""


class EmptyTrace(HfoError):
    """An operation requiring at least one record received none."""


class ParseError(HfoError):
    """A trace file row could not be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(HfoError):
    """A record violates a structural invariant (e.g. non-monotonic timestamps)."""


class TraceIOError(HfoError):
    """Reading or writing a trace file failed at the filesystem level."""


class ConfigError(HfoError):
    """A configuration value is out of its valid range."""


class EmptyTraining(HfoError):
    """A fit operation received an empty training set."""


class DimensionError(HfoError):
    """Feature-vector dimension does not match the model's training dimension."""


class EmbedderUnavailable(HfoError):
    """An external embedding service failed or returned a malformed response."""


class EmptyEvaluation(HfoError):
    """Metrics were requested over zero evaluated jobs."""


class LeakageError(HfoError):
    """A training instance violated a temporal no-leakage boundary."""
