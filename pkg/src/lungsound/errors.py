"""Exception hierarchy for lungsound.

Every error carries the process exit code the CLI reports for it:
1 for usage/configuration problems, 2 for bad input data, 3 for numeric
or model-shape failures.
"""

from pathlib import Path


class LungSoundError(Exception):
    """Base class for all lungsound errors."""

    exit_code = 2


# --- usage -----------------------------------------------------------------


class UsageError(LungSoundError):
    """Invalid invocation or option combination."""

    exit_code = 1


class ConfigError(UsageError):
    """Invalid configuration value."""


# --- data ------------------------------------------------------------------


class DataError(LungSoundError):
    """Input data could not be used."""

    exit_code = 2


class ManifestError(DataError):
    """A manifest row is malformed."""

    def __init__(self, path: Path | str, row: int, field: str, message: str):
        self.path = Path(path)
        self.row = row
        self.field = field
        super().__init__(f"{self.path}: row {row}, field '{field}': {message}")


class AnnotationError(DataError):
    """A respiratory-cycle annotation row is malformed."""

    def __init__(self, path: Path | str, row: int, message: str):
        self.path = Path(path)
        self.row = row
        super().__init__(f"{self.path}: row {row}: {message}")


class AudioError(DataError):
    """Audio file could not be decoded."""


class TruncatedAudioError(AudioError):
    """Audio data ends before the declared size."""


class UnsupportedEncodingError(AudioError):
    """Audio sample encoding is not supported."""


class EmptySelectionError(DataError):
    """A filter left no recordings."""


class SplitError(DataError):
    """A subject-exclusive split cannot satisfy its constraints."""

    def __init__(self, diagnosis: str, message: str):
        self.diagnosis = diagnosis
        super().__init__(f"class '{diagnosis}': {message}")


class FrameFileError(DataError):
    """Frame tensor file is malformed."""


class ModelFileError(DataError):
    """Model file is malformed."""


class ChecksumError(ModelFileError):
    """Model file checksum does not match its contents."""


class VersionError(ModelFileError):
    """Model file was written by an incompatible format version or graph."""


# --- numeric ---------------------------------------------------------------


class NumericError(LungSoundError):
    """Numeric failure inside the network engine."""

    exit_code = 3


class ShapeError(NumericError):
    """Tensor shape does not match what a layer expects."""

    def __init__(self, layer: str, message: str):
        self.layer = layer
        super().__init__(f"layer {layer}: {message}")


class NonFiniteError(NumericError):
    """A layer produced NaN or infinite values."""

    def __init__(self, layer: str):
        self.layer = layer
        super().__init__(f"layer {layer}: non-finite values in output")


class NaNLossError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


class GradientStateError(NumericError):
    """Backward pass requested without a cached forward pass."""


class ParameterError(NumericError):
    """Parameters are missing or do not fit the graph."""
