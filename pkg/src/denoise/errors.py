"""
Exception hierarchy for denoise.

Every error raised by the library derives from DenoiseError. The three
families below map onto the command line exit codes:

    ConfigError  -> 2  (bad configuration values or unresolvable paths)
    DataError    -> 3  (malformed audio, manifests, models or shapes)
    NumericError -> 4  (training diverged)
"""


class DenoiseError(Exception):
    """Base class for all denoise errors."""

    exit_code = 1


class ConfigError(DenoiseError):
    """Raised when a configuration value or file is invalid."""

    exit_code = 2


class DataError(DenoiseError):
    """Raised when input data violates a format or shape contract."""

    exit_code = 3


class NumericError(DenoiseError):
    """Raised when a numerical procedure fails."""

    exit_code = 4


# Audio I/O


class UnsupportedFormat(DataError):
    """Raised for WAV files with the wrong rate, channel count or encoding."""

    pass


class CorruptFile(DataError):
    """Raised when an audio container cannot be parsed."""

    pass


class IoFailure(DataError):
    """Raised when a file cannot be read or written."""

    pass


# Signal processing and shapes


class SignalTooShort(DataError):
    """Raised when a signal is shorter than one analysis window."""

    pass


class DimensionMismatch(DataError):
    """Raised when two arrays that must align have different shapes."""

    pass


DimMismatch = DimensionMismatch
ShapeMismatch = DimensionMismatch


class LengthMismatch(DataError):
    """Raised when two signals that must align have different lengths."""

    pass


class IndexOutOfRange(DataError):
    """Raised when a frame index lies outside a spectrogram."""

    pass


# Mixing and datasets


class SilentClean(DataError):
    """Raised when the clean signal has no power, so SNR is undefined."""

    pass


class SilentNoiseMixture(DataError):
    """Raised when the summed noise mixture has no power."""

    pass


class EmptyCorpus(DataError):
    """Raised when a clean or noise corpus has no files."""

    pass


class CountTooSmall(DataError):
    """Raised when a test manifest cannot cover every grid SNR."""

    pass


class EmptyDataset(DataError):
    """Raised when training or validation data is empty."""

    pass


class MissingEnhanced(DataError):
    """Raised when an enhanced file is missing for a manifest entry."""

    pass


# Estimation and metrics


class TooFewFrames(DataError):
    """Raised when a spectrogram has fewer frames than an estimator needs."""

    pass


class NonPositiveFrequency(DataError):
    """Raised when a hearing threshold is requested at a frequency <= 0."""

    pass


class TooShort(DataError):
    """Raised when too little active speech remains for STOI."""

    pass


class AllSilent(DataError):
    """Raised when every segmental SNR frame falls below the energy gate."""

    pass


# Models


class BadDims(ConfigError):
    """Raised for invalid network layer dimensions."""

    pass


class VersionMismatch(DataError):
    """Raised when a model file has an unsupported format version."""

    pass


class ChecksumMismatch(DataError):
    """Raised when a model file is truncated or its parameters are corrupt."""

    pass


class DivergedLoss(NumericError):
    """Raised when the training loss becomes non-finite."""

    pass
