"""
Data models shared across the enhancement pipeline.

This module contains the dataclasses that flow between the audio, DSP,
noise-estimation, psychoacoustic and mixing stages. Each model owns the
invariants of its data and checks them on construction.

Classes:
    AudioSignal: Mono waveform plus sample rate.
    StftConfig: Framing and transform parameters of the STFT.
    LogPowerSpectrogram: T x (N+1) natural-log power matrix.
    PhaseSpectrogram: T x (N+1) phase matrix in radians.
    NoiseEstimate: Per-frame noise log-power estimate.
    FrequencyWeights: Positive per-bin importance weights.
    MixSpec: Reproducible description of one corrupted utterance.
    DatasetManifest: Ordered list of MixSpec entries for one split.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.signal import get_window

from .errors import ConfigError, DataError

SAMPLE_RATE_HZ = 16000

SNR_GRID_DB = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)

MAX_NOISES = 4

SPLITS = ("train", "validation", "test")


@dataclass(eq=False)
class AudioSignal:
    """
    A mono waveform.

    Samples are stored as float64. In-memory values may exceed [-1, 1]
    (mixtures and reconstructions can overshoot); saturation happens only
    when writing to disk.

    Attributes:
        samples: 1-D array of finite samples.
        sample_rate_hz: Sampling rate in Hz.
    """

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DataError(
                f"AudioSignal must be 1-D, got shape {self.samples.shape}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise DataError("AudioSignal contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        """Duration in seconds."""
        return len(self) / float(self.sample_rate_hz)

    def power(self) -> float:
        """Mean squared amplitude over the whole signal."""
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.samples**2))


@dataclass(frozen=True)
class StftConfig:
    """
    Short-time Fourier transform parameters.

    The defaults give 16 ms windows with an 8 ms shift at 16 kHz and a
    256-point DFT, i.e. N = 128 and 129 frequency bins.

    Attributes:
        window_len: Analysis window length in samples.
        hop: Frame shift in samples.
        dft_size: DFT length in samples (frames are zero-padded to it).
        window_kind: Window name understood by scipy.signal.get_window.
        power_floor: Floor applied to squared magnitudes before the log.
        sample_rate_hz: Sampling rate the framing assumes.
    """

    window_len: int = 256
    hop: int = 128
    dft_size: int = 256
    window_kind: str = "hamming"
    power_floor: float = 1e-10
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self) -> None:
        if self.hop < 1:
            raise ConfigError(f"hop must be >= 1, got {self.hop}")
        if not self.hop <= self.window_len <= self.dft_size:
            raise ConfigError(
                "STFT requires hop <= window_len <= dft_size, got "
                f"hop={self.hop}, window_len={self.window_len}, "
                f"dft_size={self.dft_size}"
            )
        if self.dft_size % 2 != 0:
            raise ConfigError(f"dft_size must be even, got {self.dft_size}")
        if self.power_floor <= 0:
            raise ConfigError(f"power_floor must be > 0, got {self.power_floor}")

    @property
    def n_bins(self) -> int:
        """Number of frequency bins, N + 1."""
        return self.dft_size // 2 + 1

    @property
    def nyquist_bin(self) -> int:
        """Index of the last bin, N."""
        return self.dft_size // 2

    @property
    def bin_spacing_hz(self) -> float:
        """Frequency distance between adjacent bins."""
        return self.sample_rate_hz / float(self.dft_size)

    def bin_frequencies(self) -> np.ndarray:
        """Center frequency of every bin in Hz."""
        return np.arange(self.n_bins) * self.bin_spacing_hz

    def window(self) -> np.ndarray:
        """Periodic analysis (and synthesis) window."""
        return get_window(self.window_kind, self.window_len, fftbins=True)

    def n_frames(self, length: int) -> int:
        """Closed-form frame count for a signal of `length` samples."""
        if length < self.window_len:
            return 0
        return (length - self.window_len) // self.hop + 1


@dataclass(eq=False)
class LogPowerSpectrogram:
    """
    Natural-log power spectrogram.

    Attributes:
        values: T x (N+1) matrix of ln(max(|X|^2, power_floor)).
        config: The STFT configuration that produced it.
    """

    values: np.ndarray
    config: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise DataError(
                f"log-power spectrogram must be T x bins with T >= 1, "
                f"got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("log-power spectrogram contains non-finite values")

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.values.shape[1])

    def frame(self, t: int) -> np.ndarray:
        """Return frame t (a copy-free view)."""
        return self.values[t]


@dataclass(eq=False)
class PhaseSpectrogram:
    """
    STFT phase in radians, every entry in (-pi, pi].

    Attributes:
        values: T x (N+1) phase matrix.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def shape(self):
        return self.values.shape


@dataclass(eq=False)
class NoiseEstimate:
    """
    Noise log-power estimate aligned with a spectrogram.

    Attributes:
        values: T x (N+1) log-power matrix (the stationary variant repeats
            one row).
        mode: "stationary" or "running".
    """

    values: np.ndarray
    mode: str

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.mode not in ("stationary", "running"):
            raise DataError(f"unknown noise estimate mode '{self.mode}'")
        if not np.all(np.isfinite(self.values)):
            raise DataError("noise estimate contains non-finite values")

    def frame(self, t: int) -> np.ndarray:
        """The estimate used to augment frame t."""
        return self.values[t]


@dataclass(eq=False)
class FrequencyWeights:
    """
    Per-bin frequency-importance weights for the weighted training loss.

    Attributes:
        w: (N+1) vector of positive weights, normalised so that
            sum(w**2) equals N.
        kind: "global-ath" or "per-frame-masking".
    """

    w: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if np.any(self.w <= 0) or not np.all(np.isfinite(self.w)):
            raise DataError("frequency weights must be finite and positive")

    def __len__(self) -> int:
        return int(self.w.shape[0])


@dataclass
class MixSpec:
    """
    Reproducible description of one corrupted utterance.

    Paths are relative to the manifest's corpus root.

    Attributes:
        utterance_id: Stable identifier, also the output file stem.
        clean: Clean speech file.
        noises: One to four noise files, mixed with equal weights.
        snr_db: Requested speech-to-noise ratio over the full utterance.
        offsets: Start sample inside each noise file.
        seed: Per-entry seed the entry was drawn with.
    """

    utterance_id: str
    clean: str
    noises: List[str]
    snr_db: float
    offsets: List[int]
    seed: int

    def __post_init__(self) -> None:
        if not 1 <= len(self.noises) <= MAX_NOISES:
            raise DataError(
                f"{self.utterance_id}: expected 1-{MAX_NOISES} noises, "
                f"got {len(self.noises)}"
            )
        if len(self.offsets) != len(self.noises):
            raise DataError(
                f"{self.utterance_id}: {len(self.offsets)} offsets for "
                f"{len(self.noises)} noises"
            )

    def to_record(self) -> dict:
        """JSON Lines record."""
        return {
            "id": self.utterance_id,
            "clean": self.clean,
            "noises": list(self.noises),
            "snr_db": self.snr_db,
            "offsets": [int(o) for o in self.offsets],
            "seed": int(self.seed),
        }

    @classmethod
    def from_record(cls, record: dict) -> "MixSpec":
        try:
            return cls(
                utterance_id=str(record["id"]),
                clean=str(record["clean"]),
                noises=[str(n) for n in record["noises"]],
                snr_db=float(record["snr_db"]),
                offsets=[int(o) for o in record["offsets"]],
                seed=int(record["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed manifest entry {record!r}: {exc}") from exc


@dataclass
class DatasetManifest:
    """
    Ordered dataset description for one split.

    Attributes:
        entries: MixSpec entries, in generation order.
        split: "train", "validation" or "test".
        global_seed: Seed every entry seed derives from.
        corpus_root: Directory the entry paths are relative to.
    """

    entries: List[MixSpec]
    split: str
    global_seed: int
    corpus_root: Optional[str] = None

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise DataError(f"unknown split '{self.split}'")
        if not self.entries:
            raise DataError("manifest has no entries")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)
