"""Exception hierarchy.

``MetanetError`` is the root for everything raised deliberately by this
package. File and model format problems live under ``FileFormatError`` so the
CLI can map them to a distinct exit code from internal invariant violations.
"""


class MetanetError(Exception):
    """Base class for all errors raised by metanet."""


class ConfigError(MetanetError):
    """Invalid physics configuration (bad value or unknown key)."""


class ZeroFieldError(MetanetError):
    """An operation that needs a nonzero field received an all-zero one."""


class NonPositiveDistanceError(MetanetError):
    """Propagation distance must be strictly positive."""


class MethodMismatchError(MetanetError):
    """Adjoint sweep paired with a forward trace of a different method."""


class GridMismatchError(MetanetError):
    """Fields, layers, or operators with incompatible grid sizes."""


class LayoutOverflowError(MetanetError):
    """Requested detector regions do not fit in the grid."""


class AllZeroRegionsError(MetanetError):
    """All ten detector regions captured exactly zero energy."""


class EmptyDatasetError(MetanetError):
    """A dataset with zero samples was passed where data is required."""


class BadLevelsError(MetanetError):
    """Phase quantization needs at least two levels."""


class FileFormatError(MetanetError):
    """A file on disk does not match its documented format."""


class BadMagicError(FileFormatError):
    """Wrong magic number at the start of a binary file."""


class CountMismatchError(FileFormatError):
    """Image and label files disagree on the number of items."""


class TruncatedFileError(FileFormatError):
    """File ended before the promised payload."""


class InvalidTableError(FileFormatError):
    """Calibration table is non-monotone or does not span a full cycle."""


class ModelFormatError(FileFormatError):
    """Model JSON is missing fields or has an unsupported version."""
