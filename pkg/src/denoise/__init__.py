"""
denoise - DNN speech enhancement under multiple simultaneous noises

A Python toolkit for training feedforward networks that map noisy
log-power spectra to clean ones, with noise-aware inputs,
psychoacoustically weighted losses, a Log-MMSE baseline and objective
metrics.

Example:
    >>> from denoise import Enhancer, FeatureConfig, load_model, read_wav
    >>> model = load_model("models/bed.json")
    >>> enhancer = Enhancer(model, FeatureConfig(input_mode="bed"))
    >>> enhanced = enhancer.enhance(read_wav("noisy.wav"))

Debug Mode Example:
    >>> enhanced = enhancer.enhance(read_wav("noisy.wav"), debug=True)
    >>> trace = enhancer.get_trace()
    >>> print(trace.summary())
"""

__version__ = "0.1.0"

from .audio_io import read_wav, wav_length, write_wav
from .config import (
    DatasetConfig,
    ExperimentConfig,
    PathsConfig,
    apply_overrides,
    desk_profile,
    full_profile,
    load_config,
    save_config,
)
from .dsp import Analysis, analyze, log_power, reconstruct, stft
from .enhancer import Enhancer, enhance
from .errors import (
    ConfigError,
    DataError,
    DenoiseError,
    DimensionMismatch,
    DimMismatch,
    DivergedLoss,
    LengthMismatch,
    NumericError,
    ShapeMismatch,
    SignalTooShort,
)
from .export import SpectrogramExporter
from .features import (
    FeatureConfig,
    PairSet,
    TrainingPair,
    augment,
    compute_feature_norm,
    context_matrix,
    expand_context,
    feature_dim,
    make_training_pairs,
)
from .logmmse import (
    LogMmseConfig,
    LogMmseEstimate,
    logmmse_enhance,
    logmmse_estimate,
    lsa_gain,
)
from .metrics import (
    MetricsReport,
    UtteranceMetrics,
    noise_reduction,
    segmental_snr,
    speech_distortion,
    stoi,
)
from .mixer import (
    MixResult,
    build_manifest,
    load_manifest,
    measured_snr_db,
    mix,
    save_manifest,
    synthesize,
)
from .mlp import (
    FeatureNorm,
    MlpModel,
    TrainConfig,
    TrainingData,
    forward,
    init_model,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from .models import (
    AudioSignal,
    DatasetManifest,
    FrequencyWeights,
    LogPowerSpectrogram,
    MixSpec,
    NoiseEstimate,
    PhaseSpectrogram,
    StftConfig,
)
from .noise_estimation import (
    NoiseTracker,
    TrackerConfig,
    running_estimate,
    stationary_estimate,
)
from .psychoacoustics import ath_db, ath_weights, bark, masking_weights
from .tracer import EnhanceTrace, PipelineStage

__all__ = [
    # Main API
    "Enhancer",
    "enhance",
    "logmmse_enhance",
    "logmmse_estimate",
    "LogMmseConfig",
    "LogMmseEstimate",
    "lsa_gain",
    # Models
    "AudioSignal",
    "StftConfig",
    "LogPowerSpectrogram",
    "PhaseSpectrogram",
    "NoiseEstimate",
    "FrequencyWeights",
    "MixSpec",
    "DatasetManifest",
    # Audio and DSP
    "read_wav",
    "write_wav",
    "wav_length",
    "stft",
    "log_power",
    "analyze",
    "Analysis",
    "reconstruct",
    # Mixing
    "mix",
    "MixResult",
    "build_manifest",
    "synthesize",
    "save_manifest",
    "load_manifest",
    "measured_snr_db",
    # Noise estimation
    "NoiseTracker",
    "TrackerConfig",
    "stationary_estimate",
    "running_estimate",
    # Psychoacoustics
    "ath_db",
    "ath_weights",
    "bark",
    "masking_weights",
    # Network
    "MlpModel",
    "FeatureNorm",
    "TrainConfig",
    "TrainingData",
    "init_model",
    "forward",
    "loss_and_grad",
    "train",
    "save_model",
    "load_model",
    # Features
    "FeatureConfig",
    "TrainingPair",
    "PairSet",
    "feature_dim",
    "expand_context",
    "context_matrix",
    "augment",
    "make_training_pairs",
    "compute_feature_norm",
    # Metrics
    "speech_distortion",
    "noise_reduction",
    "stoi",
    "segmental_snr",
    "UtteranceMetrics",
    "MetricsReport",
    # Configuration
    "ExperimentConfig",
    "DatasetConfig",
    "PathsConfig",
    "load_config",
    "save_config",
    "apply_overrides",
    "full_profile",
    "desk_profile",
    # Export
    "SpectrogramExporter",
    # Errors
    "DenoiseError",
    "ConfigError",
    "DataError",
    "NumericError",
    "SignalTooShort",
    "DimensionMismatch",
    "DimMismatch",
    "ShapeMismatch",
    "LengthMismatch",
    "DivergedLoss",
    # Debug/Tracing
    "EnhanceTrace",
    "PipelineStage",
]
