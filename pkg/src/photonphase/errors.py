"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all photonphase errors."""


class GeometryMismatch(ToolkitError):
    """Grid shapes, pitches or placements are inconsistent."""


class SamplingViolation(ToolkitError):
    """A propagation plan violates its anti-aliasing bound."""


class NegativeIntensity(ToolkitError):
    """An intensity image contains negative values."""


class CalibrationMissing(ToolkitError):
    """SLM calibration tables are absent or malformed."""


class InsufficientFrames(ToolkitError):
    """Temporal SNR estimation needs at least two frames."""


class DegenerateImage(ToolkitError):
    """An image with zero variance where variation is required."""


class UnknownClass(ToolkitError):
    """Unrecognised synthetic object class."""


class ConfigInvalid(ToolkitError):
    """Run configuration failed validation; message carries the field path."""


class DataError(ToolkitError):
    """Dataset files are missing, mismatched or corrupt."""


class SplitMissing(DataError):
    """Requested split is absent from the dataset."""


class PairingError(DataError):
    """Evaluation inputs cannot be paired example-for-example."""


class ChecksumMismatch(DataError):
    """Stored checksum does not match file contents."""
