"""
STFT analysis, log-power features and overlap-add reconstruction.

Frame t covers samples [t*hop, t*hop + window_len). Frames are windowed,
zero-padded to dft_size and transformed with a real FFT, giving N + 1 bins.
Reconstruction is the single-pass least-squares overlap-add: every inverse
frame is multiplied by the synthesis window (equal to the analysis window)
and the sum is divided by the overlapped squared-window envelope.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, SignalTooShort
from .models import AudioSignal, LogPowerSpectrogram, PhaseSpectrogram, StftConfig

ENVELOPE_FLOOR = 1e-8


@dataclass(eq=False)
class Analysis:
    """
    Everything the pipeline derives from one STFT pass.

    Attributes:
        magnitude: T x (N+1) nonnegative magnitudes.
        phase: Phase of the same frames.
        power: Squared magnitudes (linear power).
        log_power: Floored natural-log power.
        length: Number of samples in the analysed signal.
    """

    magnitude: np.ndarray
    phase: PhaseSpectrogram
    power: np.ndarray
    log_power: LogPowerSpectrogram
    length: int


def frame_signal(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Split samples into T x window_len frames (a read-only view)."""
    n_frames = cfg.n_frames(samples.shape[0])
    if n_frames < 1:
        raise SignalTooShort(
            f"signal of {samples.shape[0]} samples is shorter than one "
            f"window ({cfg.window_len} samples)"
        )
    frames = sliding_window_view(samples, cfg.window_len)[:: cfg.hop]
    return frames[:n_frames]


def stft(
    signal: AudioSignal, cfg: StftConfig
) -> Tuple[np.ndarray, PhaseSpectrogram]:
    """
    Short-time Fourier transform.

    Args:
        signal: Input waveform, at least one window long.
        cfg: Framing parameters.

    Returns:
        (magnitude, phase) with T = floor((len - window_len) / hop) + 1 rows
        and N + 1 columns.

    Raises:
        SignalTooShort: The signal is shorter than window_len.
    """
    frames = frame_signal(signal.samples, cfg) * cfg.window()
    spectrum = np.fft.rfft(frames, n=cfg.dft_size, axis=1)
    phase = np.angle(spectrum)
    # np.angle returns -pi for negative reals with a -0.0 imaginary part
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return np.abs(spectrum), PhaseSpectrogram(phase)


def log_power(magnitude: np.ndarray, cfg: StftConfig) -> LogPowerSpectrogram:
    """ln(max(magnitude**2, power_floor)) per entry."""
    magnitude = np.asarray(magnitude, dtype=np.float64)
    values = np.log(np.maximum(magnitude**2, cfg.power_floor))
    return LogPowerSpectrogram(values=values, config=cfg)


def analyze(signal: AudioSignal, cfg: StftConfig) -> Analysis:
    """Run the STFT once and derive every representation from it."""
    magnitude, phase = stft(signal, cfg)
    power = magnitude**2
    return Analysis(
        magnitude=magnitude,
        phase=phase,
        power=power,
        log_power=log_power(magnitude, cfg),
        length=len(signal),
    )


def overlap_add(frames: np.ndarray, cfg: StftConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Overlap-add windowed frames.

    Returns:
        (signal, envelope): the summed synthesis-windowed frames and the
        summed squared window over the same span.
    """
    n_frames = frames.shape[0]
    window = cfg.window()
    span = (n_frames - 1) * cfg.hop + cfg.window_len
    out = np.zeros(span)
    envelope = np.zeros(span)
    for t in range(n_frames):
        start = t * cfg.hop
        out[start : start + cfg.window_len] += frames[t] * window
        envelope[start : start + cfg.window_len] += window**2
    return out, envelope


def reconstruct(
    log_power_est: LogPowerSpectrogram,
    noisy_phase: PhaseSpectrogram,
    cfg: StftConfig,
    out_len: int,
) -> AudioSignal:
    """
    Rebuild a waveform from estimated log-power and the noisy phase.

    Args:
        log_power_est: Estimated clean log-power spectra.
        noisy_phase: Phase taken from the noisy utterance.
        cfg: The STFT configuration used for analysis.
        out_len: Length of the returned signal (truncated or zero-padded).

    Returns:
        The least-squares overlap-add reconstruction.

    Raises:
        DimensionMismatch: Magnitude and phase shapes differ, or the bin
            count does not match cfg.
    """
    values = log_power_est.values
    if values.shape != noisy_phase.shape:
        raise DimensionMismatch(
            f"log-power shape {values.shape} != phase shape {noisy_phase.shape}"
        )
    if values.shape[1] != cfg.n_bins:
        raise DimensionMismatch(
            f"spectrogram has {values.shape[1]} bins, config expects {cfg.n_bins}"
        )

    magnitude = np.exp(values / 2.0)
    spectrum = magnitude * np.exp(1j * noisy_phase.values)
    frames = np.fft.irfft(spectrum, n=cfg.dft_size, axis=1)[:, : cfg.window_len]

    summed, envelope = overlap_add(frames, cfg)
    samples = summed / np.maximum(envelope, ENVELOPE_FLOOR)

    if samples.shape[0] >= out_len:
        samples = samples[:out_len]
    else:
        samples = np.pad(samples, (0, out_len - samples.shape[0]))
    return AudioSignal(samples=samples, sample_rate_hz=cfg.sample_rate_hz)
