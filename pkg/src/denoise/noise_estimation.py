"""
Noise log-power estimates for noise-aware input augmentation.

Two estimators are provided:

- stationary_estimate: the mean of the first F noisy log-power frames,
  repeated for the whole utterance.
- running_estimate: a causal per-frame tracker driven by the a-posteriori
  speech presence probability under a fixed a-priori SNR. Where speech is
  unlikely the current periodogram feeds the recursive noise average;
  where it is likely the previous estimate is held.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, TooFewFrames
from .models import LogPowerSpectrogram, NoiseEstimate

DEFAULT_POWER_FLOOR = 1e-10

# exp() argument cap in the likelihood ratio
_MAX_LOG_GLR = 50.0


@dataclass(frozen=True)
class TrackerConfig:
    """
    Parameters of the speech-presence-probability noise tracker.

    Attributes:
        xi_opt_db: Fixed a-priori SNR of the speech-present hypothesis.
        speech_prior: A-priori speech presence probability.
        alpha_noise: Smoothing constant of the noise power recursion.
        alpha_presence: Smoothing constant of the averaged presence
            probability used for stuck detection.
        stuck_limit: Presence probability clamp applied while the averaged
            probability exceeds it.
    """

    xi_opt_db: float = 15.0
    speech_prior: float = 0.5
    alpha_noise: float = 0.8
    alpha_presence: float = 0.9
    stuck_limit: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 < self.speech_prior < 1.0:
            raise ConfigError(
                f"speech_prior must be in (0, 1), got {self.speech_prior}"
            )
        for name in ("alpha_noise", "alpha_presence", "stuck_limit"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")


class NoiseTracker:
    """
    Causal speech-presence-probability noise power tracker.

    Feed one linear power frame at a time with update(); the current
    estimate is available as noise_power. The first frame initialises the
    estimate directly.

    Example:
        >>> tracker = NoiseTracker(n_bins=129)
        >>> for frame in noisy_power:
        ...     tracker.update(frame)
        >>> tracker.noise_power.shape
        (129,)
    """

    def __init__(
        self,
        n_bins: int,
        config: Optional[TrackerConfig] = None,
        power_floor: float = DEFAULT_POWER_FLOOR,
    ):
        self.n_bins = n_bins
        self.config = config or TrackerConfig()
        self.power_floor = power_floor

        xi_opt = 10.0 ** (self.config.xi_opt_db / 10.0)
        self._prior_factor = self.config.speech_prior / (1.0 - self.config.speech_prior)
        self._log_glr_offset = np.log(1.0 / (1.0 + xi_opt))
        self._glr_slope = xi_opt / (1.0 + xi_opt)
        self.reset()

    def reset(self) -> None:
        """Forget all state; the next frame re-initialises the estimate."""
        self.noise_power: Optional[np.ndarray] = None
        self.presence_mean = np.full(self.n_bins, 0.5)
        self.frames_seen = 0

    def presence_probability(self, frame_power: np.ndarray) -> np.ndarray:
        """A-posteriori speech presence probability for one frame."""
        snr_post = frame_power / np.maximum(self.noise_power, self.power_floor)
        log_glr = np.minimum(
            self._log_glr_offset + self._glr_slope * snr_post, _MAX_LOG_GLR
        )
        glr = self._prior_factor * np.exp(log_glr)
        return glr / (1.0 + glr)

    def update(self, frame_power: np.ndarray) -> np.ndarray:
        """
        Consume one frame of linear power and return the new noise estimate.

        Raises:
            DataError: The frame has the wrong size or negative power.
        """
        frame_power = np.asarray(frame_power, dtype=np.float64)
        if frame_power.shape != (self.n_bins,):
            raise DataError(
                f"expected a frame of {self.n_bins} bins, got {frame_power.shape}"
            )
        if np.any(frame_power < 0):
            raise DataError("noise tracker input power must be nonnegative")

        self.frames_seen += 1
        if self.noise_power is None:
            self.noise_power = frame_power.copy()
            return self.noise_power

        cfg = self.config
        presence = self.presence_probability(frame_power)
        self.presence_mean = (
            cfg.alpha_presence * self.presence_mean
            + (1.0 - cfg.alpha_presence) * presence
        )
        stuck = self.presence_mean > cfg.stuck_limit
        presence[stuck] = np.minimum(presence[stuck], cfg.stuck_limit)

        conditional = presence * self.noise_power + (1.0 - presence) * frame_power
        self.noise_power = (
            cfg.alpha_noise * self.noise_power + (1.0 - cfg.alpha_noise) * conditional
        )
        return self.noise_power


def track_noise_power(
    noisy_power: np.ndarray,
    config: Optional[TrackerConfig] = None,
    power_floor: float = DEFAULT_POWER_FLOOR,
) -> np.ndarray:
    """
    Run the tracker over a T x (N+1) linear power matrix.

    Returns:
        T x (N+1) linear noise power estimates; row t depends only on
        rows 0..t of the input.
    """
    noisy_power = np.asarray(noisy_power, dtype=np.float64)
    if noisy_power.ndim != 2:
        raise DataError(f"expected a T x bins power matrix, got {noisy_power.shape}")
    tracker = NoiseTracker(noisy_power.shape[1], config, power_floor)
    estimates = np.empty_like(noisy_power)
    for t in range(noisy_power.shape[0]):
        estimates[t] = tracker.update(noisy_power[t])
    return estimates


def running_estimate(
    noisy_power: np.ndarray,
    config: Optional[TrackerConfig] = None,
    power_floor: float = DEFAULT_POWER_FLOOR,
) -> NoiseEstimate:
    """
    Per-frame noise log-power estimate from linear noisy power.

    Args:
        noisy_power: T x (N+1) nonnegative linear power.
        config: Tracker parameters.
        power_floor: Floor applied before taking the log.

    Returns:
        NoiseEstimate in the log-power domain, mode "running".
    """
    linear = track_noise_power(noisy_power, config, power_floor)
    return NoiseEstimate(values=np.log(np.maximum(linear, power_floor)), mode="running")


def stationary_estimate(noisy: LogPowerSpectrogram, frames: int = 8) -> NoiseEstimate:
    """
    Mean of the first `frames` log-power frames, repeated for every frame.

    The average is taken in the log-power domain.

    Raises:
        TooFewFrames: frames < 1 or the spectrogram is shorter than frames.
    """
    if frames < 1 or noisy.n_frames < frames:
        raise TooFewFrames(
            f"stationary estimate needs {frames} frames, spectrogram has "
            f"{noisy.n_frames}"
        )
    mean = noisy.values[:frames].mean(axis=0)
    return NoiseEstimate(values=np.tile(mean, (noisy.n_frames, 1)), mode="stationary")
