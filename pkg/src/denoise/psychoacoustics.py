"""
Psychoacoustic frequency-importance weights.

Two weighting schemes drive the weighted training loss:

- ATH weights: one global vector, inversely related to the absolute
  threshold of hearing at each bin center.
- Masking weights: one vector per clean frame, derived from a triangular
  spreading threshold on the bark scale. Bins where speech energy masks
  noise get small weights; bins far below the masking peak get large ones.

Both kinds are normalised so that their squares sum to N = dft_size / 2.
"""

from typing import Optional, Union

import numpy as np

from .errors import DataError, NonPositiveFrequency
from .models import FrequencyWeights, StftConfig

ArrayLike = Union[float, np.ndarray]

# Spreading slopes in dB per bark
LOWER_SLOPE_DB = 25.0
UPPER_SLOPE_DB = 10.0

MASKING_POWER_FLOOR = 1e-12

# Bin 0 is evaluated at this fraction of the first bin spacing
ZERO_BIN_FRACTION = 0.75


def ath_db(fq_hz: ArrayLike) -> ArrayLike:
    """
    Absolute threshold of hearing in dB SPL.

    Args:
        fq_hz: Frequency (scalar or array), strictly positive.

    Returns:
        3.64 (f/1000)^-0.8 - 6.5 exp(-0.6 (f/1000 - 3.3)^2) + 1e-3 (f/1000)^4

    Raises:
        NonPositiveFrequency: Any frequency <= 0.
    """
    fq = np.asarray(fq_hz, dtype=np.float64)
    if np.any(fq <= 0):
        raise NonPositiveFrequency(f"ATH is undefined at {fq_hz} Hz")
    khz = fq / 1000.0
    result = (
        3.64 * khz**-0.8 - 6.5 * np.exp(-0.6 * (khz - 3.3) ** 2) + 1e-3 * khz**4
    )
    if np.ndim(fq_hz) == 0:
        return float(result)
    return result


def bark(fq_hz: ArrayLike) -> ArrayLike:
    """Critical-band rate: 13 atan(0.00076 f) + 3.5 atan((f / 7500)^2)."""
    fq = np.asarray(fq_hz, dtype=np.float64)
    if np.any(fq < 0):
        raise DataError(f"bark scale is undefined for negative frequency {fq_hz}")
    result = 13.0 * np.arctan(0.00076 * fq) + 3.5 * np.arctan((fq / 7500.0) ** 2)
    if np.ndim(fq_hz) == 0:
        return float(result)
    return result


def normalize_square_sum(w: np.ndarray, target: float) -> np.ndarray:
    """Scale w so that sum(w**2) equals target."""
    return w * np.sqrt(target / np.sum(w**2))


def ath_weights(cfg: StftConfig) -> FrequencyWeights:
    """
    Global weights from the hearing threshold at each bin center.

    Thresholds are shifted so that their minimum is 1 and inverted, so the
    most audible bin (near 3.3 kHz) gets the largest weight.
    """
    freqs = cfg.bin_frequencies()
    freqs[0] = ZERO_BIN_FRACTION * cfg.bin_spacing_hz
    thresholds = ath_db(freqs)
    shifted = thresholds + (1.0 - thresholds.min())
    w = normalize_square_sum(1.0 / shifted, cfg.nyquist_bin)
    return FrequencyWeights(w=w, kind="global-ath")


def masking_threshold_db(
    clean_magnitude_frame: np.ndarray, cfg: Optional[StftConfig] = None
) -> np.ndarray:
    """
    Spread masking threshold of one frame in dB.

    Each bin acts as a masker. Its contribution falls 25 dB per bark toward
    lower frequencies and 10 dB per bark toward higher frequencies; the
    threshold at a bin is the largest contribution it receives.
    """
    cfg = cfg or StftConfig()
    frame = np.asarray(clean_magnitude_frame, dtype=np.float64)
    if frame.shape != (cfg.n_bins,):
        raise DataError(f"expected {cfg.n_bins} magnitudes, got shape {frame.shape}")
    if np.any(frame < 0):
        raise DataError("magnitudes must be nonnegative")

    level_db = 10.0 * np.log10(frame**2 + MASKING_POWER_FLOOR)
    z = bark(cfg.bin_frequencies())
    # rows: masker i, columns: maskee j
    dz = z[None, :] - z[:, None]
    spread = np.where(dz < 0, LOWER_SLOPE_DB * dz, -UPPER_SLOPE_DB * dz)
    return np.max(level_db[:, None] + spread, axis=0)


def masking_weights(
    clean_magnitude_frame: np.ndarray,
    cfg: Optional[StftConfig] = None,
    invert: bool = False,
) -> FrequencyWeights:
    """
    Per-frame weights from the spread masking threshold.

    The threshold is scaled to a maximum of 1; the absolute base-10 log of
    the scaled threshold is shifted to a minimum of 1 and used directly as
    the weight. `invert=True` uses the reciprocal instead.
    """
    cfg = cfg or StftConfig()
    mth_db = masking_threshold_db(clean_magnitude_frame, cfg)
    log_scaled = np.abs(mth_db - mth_db.max()) / 10.0
    shifted = log_scaled + (1.0 - log_scaled.min())
    w = 1.0 / shifted if invert else shifted
    w = normalize_square_sum(w, cfg.nyquist_bin)
    return FrequencyWeights(w=w, kind="per-frame-masking")


def frame_weights(
    source: str,
    clean_magnitude: np.ndarray,
    cfg: StftConfig,
    invert: bool = False,
) -> np.ndarray:
    """
    Weight matrix for every frame of an utterance.

    Args:
        source: "ath" (the global vector repeated) or "masking".
        clean_magnitude: T x (N+1) clean magnitudes.
        cfg: STFT configuration.
        invert: Reciprocal masking weights.

    Returns:
        T x (N+1) weights.
    """
    n_frames = clean_magnitude.shape[0]
    if source == "ath":
        return np.tile(ath_weights(cfg).w, (n_frames, 1))
    if source == "masking":
        return np.stack(
            [masking_weights(frame, cfg, invert).w for frame in clean_magnitude]
        )
    raise DataError(f"unknown weight source '{source}'")
