"""Exception hierarchy shared across the engine."""


class SlideGuideError(Exception):
    """Base class for all engine errors."""


class DecodeError(SlideGuideError):
    """Image file is corrupt or in an unsupported format."""


class InvalidDimensions(SlideGuideError):
    """Requested image dimensions are out of range."""


class ImageTooSmall(SlideGuideError):
    """Image is below the minimum size for the operation."""


class DimensionMismatch(SlideGuideError):
    """Two inputs that must share dimensions do not."""


class SchemaError(SlideGuideError):
    """Annotation document does not match the expected schema."""


class RegionRangeError(SlideGuideError):
    """Region bbox is outside [0, 1] or inverted."""


class EmptyInput(SlideGuideError):
    """An operation requiring a non-empty sequence received an empty one."""


class EmptyGlyph(SlideGuideError):
    """Font classification got a crop with essentially no ink."""


class ModelUntrained(SlideGuideError):
    """Inference requested on a model that was never trained or loaded."""


class InsufficientData(SlideGuideError):
    """Training dataset too small to satisfy the stratified split."""


class AnnotationMismatch(SlideGuideError):
    """Annotation references a slide_id with no corresponding slide."""


class VersionMismatch(SlideGuideError):
    """Persisted artifact has an incompatible format version."""


class CorruptIndex(SlideGuideError):
    """Corpus index file is malformed."""


class MissingArtifact(SlideGuideError):
    """Corpus references an artifact that does not exist and cannot be rebuilt."""
