"""
Network input assembly and training-pair generation.

Input modes:
    bd:  context-expanded noisy frames only.
    bsd: context frames plus the stationary noise estimate.
    bed: context frames plus the running per-frame noise estimate.

Context expansion concatenates frames t - tau .. t + tau; indices outside
the utterance are clamped to the first or last frame. The noise estimate,
when used, is appended as a single frame after the context block.
"""

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .dsp import Analysis, analyze
from .errors import ConfigError, DimMismatch, IndexOutOfRange, LengthMismatch
from .mlp import FeatureNorm, TrainingData
from .models import AudioSignal, LogPowerSpectrogram, NoiseEstimate, StftConfig
from .noise_estimation import TrackerConfig, running_estimate, stationary_estimate
from .psychoacoustics import frame_weights

INPUT_MODES = ("bd", "bsd", "bed")
LOSS_NAMES = ("mse", "ath", "masking")


@dataclass(frozen=True)
class FeatureConfig:
    """
    Input feature layout.

    Attributes:
        tau: Context radius in frames.
        input_mode: "bd", "bsd" or "bed".
        frames: Leading frames averaged by the stationary estimate.
    """

    tau: int = 5
    input_mode: str = "bd"
    frames: int = 8

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(
                f"input_mode must be one of {INPUT_MODES}, got '{self.input_mode}'"
            )

    @property
    def uses_noise_estimate(self) -> bool:
        return self.input_mode != "bd"


def feature_dim(input_mode: str, tau: int, n_bins: int) -> int:
    """(2 tau + 1)(N + 1) for bd, (2 tau + 2)(N + 1) otherwise."""
    blocks = 2 * tau + 1 + (0 if input_mode == "bd" else 1)
    return blocks * n_bins


def _context_indices(n_frames: int, frames: np.ndarray, tau: int) -> np.ndarray:
    offsets = np.arange(-tau, tau + 1)
    return np.clip(frames[:, None] + offsets[None, :], 0, n_frames - 1)


def expand_context(spec: LogPowerSpectrogram, t: int, tau: int) -> np.ndarray:
    """
    Context vector [n_{t-tau}, ..., n_t, ..., n_{t+tau}] with edge
    replication.

    Raises:
        IndexOutOfRange: t is not a frame of spec.
    """
    if not 0 <= t < spec.n_frames:
        raise IndexOutOfRange(f"frame {t} outside 0..{spec.n_frames - 1}")
    idx = _context_indices(spec.n_frames, np.array([t]), tau)[0]
    return spec.values[idx].reshape(-1)


def context_matrix(spec: LogPowerSpectrogram, tau: int) -> np.ndarray:
    """Row t equals expand_context(spec, t, tau), for every frame."""
    idx = _context_indices(spec.n_frames, np.arange(spec.n_frames), tau)
    return spec.values[idx].reshape(spec.n_frames, -1)


def augment(y_t: np.ndarray, e_t: np.ndarray) -> np.ndarray:
    """
    Append a noise estimate frame to a context vector.

    Raises:
        DimMismatch: The context length is not a whole number of frames of
            the estimate's size.
    """
    y_t = np.asarray(y_t, dtype=np.float64)
    e_t = np.asarray(e_t, dtype=np.float64)
    if e_t.ndim != 1 or y_t.ndim != 1 or y_t.shape[0] % e_t.shape[0] != 0:
        raise DimMismatch(
            f"cannot append estimate of shape {e_t.shape} to context of "
            f"shape {y_t.shape}"
        )
    return np.concatenate([y_t, e_t])


def noise_estimate(
    analysis: Analysis,
    feat_cfg: FeatureConfig,
    stft_cfg: StftConfig,
    tracker_cfg: Optional[TrackerConfig] = None,
) -> Optional[NoiseEstimate]:
    """
    The estimate the input mode appends, or None for bd.

    The stationary estimate averages min(frames, T) leading frames, so
    signals shorter than frames still get an estimate.
    """
    if feat_cfg.input_mode == "bsd":
        frames = min(feat_cfg.frames, analysis.log_power.n_frames)
        return stationary_estimate(analysis.log_power, frames)
    if feat_cfg.input_mode == "bed":
        return running_estimate(analysis.power, tracker_cfg, stft_cfg.power_floor)
    return None


def build_inputs(
    analysis: Analysis,
    feat_cfg: FeatureConfig,
    stft_cfg: StftConfig,
    tracker_cfg: Optional[TrackerConfig] = None,
) -> np.ndarray:
    """T x feature_dim input matrix for one noisy utterance."""
    context = context_matrix(analysis.log_power, feat_cfg.tau)
    estimate = noise_estimate(analysis, feat_cfg, stft_cfg, tracker_cfg)
    if estimate is None:
        return context
    return np.hstack([context, estimate.values])


@dataclass
class TrainingPair:
    """
    One training example.

    Attributes:
        input: Context (and estimate) vector.
        target: Clean log-power frame.
        mask_weights: Per-frame masking weights, when training with them.
    """

    input: np.ndarray
    target: np.ndarray
    mask_weights: Optional[np.ndarray] = None


@dataclass(eq=False)
class PairSet:
    """
    All training pairs of one or more utterances, stored as matrices.

    Indexing yields TrainingPair objects; to_training_data() hands the
    matrices to the trainer.

    Attributes:
        inputs: M x feature_dim.
        targets: M x (N+1).
        mask_weights: M x (N+1) or None.
    """

    inputs: np.ndarray
    targets: np.ndarray
    mask_weights: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    def __getitem__(self, t: int) -> TrainingPair:
        return TrainingPair(
            input=self.inputs[t],
            target=self.targets[t],
            mask_weights=None if self.mask_weights is None else self.mask_weights[t],
        )

    def __iter__(self) -> Iterator[TrainingPair]:
        for t in range(len(self)):
            yield self[t]

    @classmethod
    def concatenate(cls, parts: list) -> "PairSet":
        """Stack the pairs of several utterances in order."""
        weights = None
        if parts and all(p.mask_weights is not None for p in parts):
            weights = np.vstack([p.mask_weights for p in parts])
        return cls(
            inputs=np.vstack([p.inputs for p in parts]),
            targets=np.vstack([p.targets for p in parts]),
            mask_weights=weights,
        )

    def to_training_data(
        self, global_weights: Optional[np.ndarray] = None
    ) -> TrainingData:
        """Trainer view; global_weights (ATH) apply when no mask weights exist."""
        weights = self.mask_weights if self.mask_weights is not None else global_weights
        return TrainingData(inputs=self.inputs, targets=self.targets, weights=weights)


def make_training_pairs(
    clean: AudioSignal,
    noisy: AudioSignal,
    feat_cfg: FeatureConfig,
    stft_cfg: StftConfig,
    loss_mode: str = "mse",
    tracker_cfg: Optional[TrackerConfig] = None,
    invert_masking: bool = False,
) -> PairSet:
    """
    One (input, target) pair per frame of an aligned clean/noisy utterance.

    Args:
        clean: Clean utterance.
        noisy: The same utterance after mixing; sample-aligned with clean.
        feat_cfg: Input layout.
        stft_cfg: Analysis parameters.
        loss_mode: "mse", "ath" or "masking"; masking attaches per-frame
            weights computed from the clean magnitudes.
        tracker_cfg: Running tracker parameters for bed.
        invert_masking: Reciprocal masking weights.

    Raises:
        LengthMismatch: The signals differ in length.
    """
    if len(clean) != len(noisy):
        raise LengthMismatch(
            f"clean has {len(clean)} samples, noisy has {len(noisy)}"
        )
    if loss_mode not in LOSS_NAMES:
        raise ConfigError(f"loss mode must be one of {LOSS_NAMES}, got '{loss_mode}'")

    clean_analysis = analyze(clean, stft_cfg)
    noisy_analysis = analyze(noisy, stft_cfg)
    mask = None
    if loss_mode == "masking":
        mask = frame_weights(
            "masking", clean_analysis.magnitude, stft_cfg, invert_masking
        )
    return PairSet(
        inputs=build_inputs(noisy_analysis, feat_cfg, stft_cfg, tracker_cfg),
        targets=clean_analysis.log_power.values.copy(),
        mask_weights=mask,
    )


def compute_feature_norm(
    pairs: PairSet, feat_cfg: FeatureConfig, n_bins: int
) -> FeatureNorm:
    """
    Per-dimension statistics from training pairs.

    The appended noise estimate lives in the same log-power domain as the
    frames, so it is normalised with the central context frame's
    statistics.
    """
    norm = FeatureNorm.from_data(pairs.inputs, pairs.targets)
    if feat_cfg.uses_noise_estimate:
        center = slice(feat_cfg.tau * n_bins, (feat_cfg.tau + 1) * n_bins)
        tail = slice(pairs.inputs.shape[1] - n_bins, pairs.inputs.shape[1])
        norm.input_mean[tail] = norm.input_mean[center]
        norm.input_std[tail] = norm.input_std[center]
    return norm
