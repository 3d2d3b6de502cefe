"""
Synthetic desk-scale corpus.

Generates a small, fully reproducible stand-in for a speech corpus and an
office noise collection:

- Clean "speech": syllables of a harmonic source with a drifting pitch
  plus a weak noise excitation, shaped by vowel formant resonators and
  smooth syllable envelopes, separated by pauses and occasional fricative
  bursts. Every utterance starts with a short pause.
- Office noises: eight generators, split into a training pool of six and
  a disjoint test pool of two.

Layout written by generate_corpus():

    <root>/clean/train/*.wav
    <root>/clean/validation/*.wav
    <root>/clean/test/*.wav
    <root>/noise/train/*.wav
    <root>/noise/test/*.wav
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Union

import numpy as np
from scipy.signal import butter, lfilter, sosfilt
from scipy.signal.windows import tukey

from .audio_io import write_wav
from .errors import ConfigError
from .models import SAMPLE_RATE_HZ, SPLITS, AudioSignal

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# (F1, F2, F3) in Hz
VOWEL_FORMANTS = (
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (300.0, 870.0, 2240.0),
    (530.0, 1840.0, 2480.0),
    (570.0, 840.0, 2410.0),
    (660.0, 1720.0, 2410.0),
)
FORMANT_BANDWIDTHS_HZ = (90.0, 110.0, 170.0)

LEADING_PAUSE_S = 0.25
CLEAN_PEAK = 0.5
NOISE_RMS = 0.1
NOISE_FLOOR_RMS = 1e-3

TRAIN_NOISES = ("fan_hum", "printer", "keyboard", "ac_pink", "babble", "knocks")
TEST_NOISES = ("hvac", "phone_ring")


def _resonator(
    x: np.ndarray, freq_hz: float, bandwidth_hz: float, sr: int
) -> np.ndarray:
    r = np.exp(-np.pi * bandwidth_hz / sr)
    theta = 2.0 * np.pi * freq_hz / sr
    return lfilter([1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r], x)


def _syllable(
    rng: np.random.Generator, duration_s: float, f0_hz: float, sr: int
) -> np.ndarray:
    n = int(duration_s * sr)
    t = np.arange(n) / sr
    rate = rng.uniform(1.0, 3.0)
    drift = 1.0 + 0.08 * np.sin(2.0 * np.pi * rate * t + rng.uniform(0, 6.28))
    phase = 2.0 * np.pi * np.cumsum(f0_hz * drift) / sr
    n_harmonics = int(0.45 * sr / (f0_hz * 1.1))
    k = np.arange(1, n_harmonics + 1)
    source = (np.sin(np.outer(phase, k)) / k).sum(axis=1)
    source += 0.05 * rng.standard_normal(n)

    formants = VOWEL_FORMANTS[int(rng.integers(len(VOWEL_FORMANTS)))]
    voiced = np.zeros(n)
    for freq, bandwidth in zip(formants, FORMANT_BANDWIDTHS_HZ):
        voiced += _resonator(source, freq * rng.uniform(0.95, 1.05), bandwidth, sr)
    return voiced * tukey(n, 0.4) * rng.uniform(0.5, 1.0)


def _fricative(rng: np.random.Generator, sr: int) -> np.ndarray:
    n = int(rng.uniform(0.04, 0.08) * sr)
    sos = butter(4, 3000.0, btype="highpass", fs=sr, output="sos")
    return sosfilt(sos, rng.standard_normal(n)) * tukey(n, 0.5) * 0.3


def synth_utterance(
    rng: np.random.Generator, duration_s: float = 2.0, sr: int = SAMPLE_RATE_HZ
) -> AudioSignal:
    """One synthetic utterance, peak-normalised to 0.5."""
    total = int(duration_s * sr)
    out = np.zeros(total)
    f0 = rng.uniform(100.0, 220.0)
    pos = int(LEADING_PAUSE_S * sr)
    while pos < total:
        if rng.random() < 0.3:
            burst = _fricative(rng, sr)
            end = min(pos + len(burst), total)
            out[pos:end] += burst[: end - pos]
            pos = end
        syllable = _syllable(rng, rng.uniform(0.15, 0.35), f0, sr)
        end = min(pos + len(syllable), total)
        out[pos:end] += syllable[: end - pos]
        pos = end + int(rng.uniform(0.05, 0.15) * sr)

    peak = np.max(np.abs(out))
    if peak > 0:
        out *= CLEAN_PEAK / peak
    return AudioSignal(out, sr)


# Noise generators: (rng, n_samples, sr) -> samples


def _fan_hum(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    hum = sum(
        np.sin(2 * np.pi * f * t + rng.uniform(0, 6.28)) / i
        for i, f in enumerate((50, 100, 150, 200), 1)
    )
    sos = butter(2, 800.0, btype="lowpass", fs=sr, output="sos")
    return hum + 2.0 * sosfilt(sos, rng.standard_normal(n))


def _printer(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    sos = butter(2, (1500.0, 5000.0), btype="bandpass", fs=sr, output="sos")
    bursts = sosfilt(sos, rng.standard_normal(n))
    gate = (np.sin(2 * np.pi * rng.uniform(2.5, 4.0) * t) > 0.2).astype(float)
    motor = 0.3 * np.sin(2 * np.pi * 120.0 * t)
    return bursts * gate + motor


def _keyboard(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    out = np.zeros(n)
    click_len = int(0.015 * sr)
    decay = np.exp(-np.arange(click_len) / (0.003 * sr))
    sos = butter(2, 2000.0, btype="highpass", fs=sr, output="sos")
    for start in np.flatnonzero(rng.random(n - click_len) < 8.0 / sr):
        click = sosfilt(sos, rng.standard_normal(click_len)) * decay
        out[start : start + click_len] += click * rng.uniform(0.5, 1.0)
    return out


def _pink(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sr)
    spectrum[1:] /= np.sqrt(freqs[1:])
    spectrum[0] = 0.0
    return np.fft.irfft(spectrum, n)


def _babble(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    out = np.zeros(n)
    for _ in range(4):
        talker = synth_utterance(rng, n / sr + 0.5, sr).samples
        out += np.roll(talker[:n], int(rng.integers(n)))
    return out


def _knocks(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    out = np.zeros(n)
    knock_len = int(0.08 * sr)
    t = np.arange(knock_len) / sr
    for start in np.flatnonzero(rng.random(n - knock_len) < 1.5 / sr):
        freq = rng.uniform(150.0, 300.0)
        knock = np.sin(2 * np.pi * freq * t) * np.exp(-t / 0.015)
        out[start : start + knock_len] += knock
    return out


def _hvac(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    brown = np.cumsum(rng.standard_normal(n))
    sos = butter(2, 20.0, btype="highpass", fs=sr, output="sos")
    rumble = sosfilt(sos, brown)
    rumble /= np.std(rumble)
    sos = butter(2, (300.0, 3000.0), btype="bandpass", fs=sr, output="sos")
    air = sosfilt(sos, rng.standard_normal(n))
    return (rumble + air) * (1.0 + 0.1 * np.sin(2 * np.pi * 0.3 * t))


def _phone_ring(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    tone = np.sin(2 * np.pi * 440.0 * t) + np.sin(2 * np.pi * 480.0 * t)
    cycle = rng.uniform(1.5, 2.5)
    gate = ((t % cycle) < 0.5 * cycle).astype(float)
    return tone * gate


NOISE_GENERATORS: Dict[str, Callable[[np.random.Generator, int, int], np.ndarray]] = {
    "fan_hum": _fan_hum,
    "printer": _printer,
    "keyboard": _keyboard,
    "ac_pink": _pink,
    "babble": _babble,
    "knocks": _knocks,
    "hvac": _hvac,
    "phone_ring": _phone_ring,
}


def synth_noise(
    name: str,
    rng: np.random.Generator,
    duration_s: float = 6.0,
    sr: int = SAMPLE_RATE_HZ,
) -> AudioSignal:
    """
    One named office noise at RMS 0.1 over a faint white floor.

    Raises:
        ConfigError: Unknown noise name.
    """
    if name not in NOISE_GENERATORS:
        raise ConfigError(
            f"unknown noise '{name}', expected one of {list(NOISE_GENERATORS)}"
        )
    n = int(duration_s * sr)
    samples = NOISE_GENERATORS[name](rng, n, sr)
    rms = np.sqrt(np.mean(samples**2))
    # impulsive generators can emit no event in a short file
    if rms > 0:
        samples = samples * (NOISE_RMS / rms)
    samples = samples + NOISE_FLOOR_RMS * rng.standard_normal(n)
    peak = np.max(np.abs(samples))
    if peak > 0.95:
        samples *= 0.95 / peak
    return AudioSignal(samples, sr)


@dataclass
class CorpusLayout:
    """
    Files written by generate_corpus.

    Attributes:
        root: Corpus directory.
        clean: Clean files per split.
        noise: Noise files per pool ("train", "test").
    """

    root: Path
    clean: Dict[str, List[Path]] = field(default_factory=dict)
    noise: Dict[str, List[Path]] = field(default_factory=dict)


def generate_corpus(
    root: PathLike,
    counts: Dict[str, int],
    seed: int = 0,
    duration_range_s: tuple = (1.5, 3.0),
    noise_duration_s: float = 6.0,
) -> CorpusLayout:
    """
    Write the synthetic corpus.

    Args:
        root: Output directory.
        counts: Clean utterances per split, e.g. {"train": 200,
            "validation": 30, "test": 30}.
        seed: Every file derives its generator from (seed, split, index).
        duration_range_s: Clean utterance durations are uniform in it.
        noise_duration_s: Length of every noise file.

    Returns:
        CorpusLayout listing the written files.
    """
    root = Path(root)
    layout = CorpusLayout(root=root)

    for split_index, split in enumerate(SPLITS):
        paths = []
        for i in range(int(counts.get(split, 0))):
            rng = np.random.default_rng(np.random.SeedSequence([seed, split_index, i]))
            utterance = synth_utterance(rng, rng.uniform(*duration_range_s))
            path = root / "clean" / split / f"{split}_{i:04d}.wav"
            write_wav(utterance, path)
            paths.append(path)
        layout.clean[split] = paths
        logger.info("wrote %d clean %s utterances", len(paths), split)

    for pool, names in (("train", TRAIN_NOISES), ("test", TEST_NOISES)):
        paths = []
        for name in names:
            name_index = list(NOISE_GENERATORS).index(name)
            rng = np.random.default_rng(np.random.SeedSequence([seed, 100, name_index]))
            path = root / "noise" / pool / f"{name}.wav"
            write_wav(synth_noise(name, rng, noise_duration_s), path)
            paths.append(path)
        layout.noise[pool] = paths
        logger.info("wrote %d %s noises", len(paths), pool)

    return layout
