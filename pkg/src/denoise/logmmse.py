"""
Log-MMSE (log-spectral amplitude) baseline enhancer.

Per frame and bin:

    gamma = |Y|^2 / lambda_noise                          a-posteriori SNR
    xi    = a |A_prev|^2 / lambda_noise + (1 - a) max(gamma - 1, 0)
    nu    = xi gamma / (1 + xi)
    G     = xi / (1 + xi) * exp(0.5 * E1(nu))

with the noise PSD lambda_noise from the running speech-presence tracker,
xi floored at -25 dB and G floored at -25 dB. The enhanced magnitude G|Y|
is recombined with the noisy phase.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import exp1

from .dsp import Analysis, analyze, log_power, reconstruct
from .errors import ConfigError
from .models import AudioSignal, LogPowerSpectrogram, StftConfig
from .noise_estimation import TrackerConfig, track_noise_power

# E1 diverges at 0; nu is kept above this
_NU_FLOOR = 1e-12


@dataclass(frozen=True)
class LogMmseConfig:
    """
    Baseline parameters.

    Attributes:
        alpha: Decision-directed smoothing constant.
        xi_min_db: Floor of the a-priori SNR.
        gain_floor_db: Floor of the spectral gain.
    """

    alpha: float = 0.98
    xi_min_db: float = -25.0
    gain_floor_db: float = -25.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")

    @property
    def xi_min(self) -> float:
        return 10.0 ** (self.xi_min_db / 10.0)

    @property
    def gain_floor(self) -> float:
        return 10.0 ** (self.gain_floor_db / 20.0)


def lsa_gain(xi: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Log-spectral amplitude gain xi/(1+xi) * exp(E1(nu)/2)."""
    xi = np.asarray(xi, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    ratio = xi / (1.0 + xi)
    nu = np.maximum(ratio * gamma, _NU_FLOOR)
    return ratio * np.exp(0.5 * exp1(nu))


def logmmse_gains(
    noisy_power: np.ndarray,
    noise_power: np.ndarray,
    cfg: Optional[LogMmseConfig] = None,
    power_floor: float = 1e-10,
) -> np.ndarray:
    """
    T x (N+1) spectral gains for a noisy power matrix.

    The first frame uses xi = alpha + (1 - alpha) max(gamma - 1, 0); later
    frames use the decision-directed recursion on the previous output.
    Components whose power never changes, like a tone complex present
    from the first frame, match the noise PSD and are suppressed.
    """
    cfg = cfg or LogMmseConfig()
    gains = np.empty_like(noisy_power)
    previous_clean = None
    for t in range(noisy_power.shape[0]):
        noise = np.maximum(noise_power[t], power_floor)
        gamma = noisy_power[t] / noise
        ml = np.maximum(gamma - 1.0, 0.0)
        if previous_clean is None:
            xi = cfg.alpha + (1.0 - cfg.alpha) * ml
        else:
            xi = cfg.alpha * previous_clean / noise + (1.0 - cfg.alpha) * ml
        xi = np.maximum(xi, cfg.xi_min)
        gain = np.maximum(lsa_gain(xi, gamma), cfg.gain_floor)
        gains[t] = gain
        previous_clean = gain**2 * noisy_power[t]
    return gains


@dataclass
class LogMmseEstimate:
    """
    Intermediate and final spectra of one Log-MMSE run.

    Attributes:
        noise_power: T x (N+1) tracked linear noise power.
        gains: T x (N+1) spectral gains.
        log_power: Enhanced log-power spectrogram.
    """

    noise_power: np.ndarray
    gains: np.ndarray
    log_power: LogPowerSpectrogram


def logmmse_estimate(
    analysis: Analysis,
    stft_cfg: StftConfig,
    cfg: Optional[LogMmseConfig] = None,
    tracker_cfg: Optional[TrackerConfig] = None,
) -> LogMmseEstimate:
    """Noise PSD, gains and enhanced log power for an analysed utterance."""
    floor = stft_cfg.power_floor
    noise_power = track_noise_power(analysis.power, tracker_cfg, floor)
    gains = logmmse_gains(analysis.power, noise_power, cfg, floor)
    enhanced = log_power(gains * analysis.magnitude, stft_cfg)
    return LogMmseEstimate(noise_power, gains, enhanced)


def logmmse_enhance(
    noisy: AudioSignal,
    stft_cfg: StftConfig,
    cfg: Optional[LogMmseConfig] = None,
    tracker_cfg: Optional[TrackerConfig] = None,
) -> AudioSignal:
    """
    Enhance a noisy utterance with the Log-MMSE estimator.

    The noise tracker starts from the first frame's power, so anything
    present from the first frame on, such as a steady tone complex, is
    taken for noise and attenuated together with it.

    Raises:
        SignalTooShort: The signal is shorter than one window.
    """
    analysis = analyze(noisy, stft_cfg)
    estimate = logmmse_estimate(analysis, stft_cfg, cfg, tracker_cfg)
    return reconstruct(estimate.log_power, analysis.phase, stft_cfg, len(noisy))
