"""Exception types shared across the toolkit."""


class VosbenchError(Exception):
    """Base class for all toolkit errors."""


class MaskFormatError(VosbenchError):
    """Mask image is malformed or not a single-channel palette-indexed image."""


class LabelRangeError(VosbenchError):
    """A mask contains an object id above the configured maximum."""


class FrameGapError(VosbenchError):
    """A sequence directory is missing one or more frame files."""

    def __init__(self, sequence: str, missing: list[int]):
        self.sequence = sequence
        self.missing = missing
        names = ", ".join(f"{i:05d}" for i in missing)
        super().__init__(f"sequence '{sequence}' is missing frames: {names}")


class DimensionMismatchError(VosbenchError):
    """Two masks (or frames of one sequence) disagree in width/height."""


class DatasetLayoutError(VosbenchError):
    """The on-disk dataset tree violates the expected layout."""


class AlignmentError(VosbenchError):
    """Ground truth and prediction sequences cannot be aligned frame by frame."""


class UnknownObjectIdError(VosbenchError):
    """A submitted mask uses an object id absent from the ground truth."""


class EmptySeriesError(VosbenchError):
    """A per-frame score series is empty."""


class EmptyReportError(VosbenchError):
    """Aggregation was asked to summarize zero sequence results."""


class SubmissionError(VosbenchError):
    """A submission fails validation (cap exceeded, missing sequence, ...)."""


class MatrixSizeError(VosbenchError):
    """Brute-force assignment was asked to enumerate beyond its size cap."""


class SceneSpecError(VosbenchError):
    """A synthetic scene specification violates its invariants."""


class SessionNotFoundError(VosbenchError):
    """No interactive session (or sequence) with the given identifier."""


class SessionConflictError(VosbenchError):
    """A second request hit a session that is still processing another one."""


class SessionClosedError(VosbenchError):
    """The interactive session already reached a terminal state."""


class ScribbleStoreError(VosbenchError):
    """Initial scribbles for a sequence are missing or malformed."""
