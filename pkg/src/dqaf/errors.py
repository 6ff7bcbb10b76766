"""Exception types shared across the package."""


class DqafError(Exception):
    """Base class for all package errors."""


class ParseError(DqafError):
    """A record in an episode file could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class SchemaError(DqafError):
    """Input violates a structural invariant (dimensions, monotonicity, empty plan...)."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DimensionMismatch(DqafError):
    pass


class WindowTooShort(DqafError):
    pass


class NoGripperChannel(DqafError):
    pass


class MissingAnchors(DqafError):
    pass


class AllWeightsZero(DqafError):
    pass


class EmptyEpisode(DqafError):
    pass


class MissingThreshold(DqafError):
    pass


class NoReferences(DqafError):
    pass


class EmptyTrace(DqafError):
    pass


class NoFramesYet(DqafError):
    pass


class ProviderError(DqafError):
    """A semantic or feedback provider failed (network, timeout, or bad payload)."""


class MixedEpisode(DqafError):
    """Feedback inputs were assembled from more than one episode."""


class NotCalibrated(DqafError):
    pass


class OverlappingFaults(DqafError):
    pass
