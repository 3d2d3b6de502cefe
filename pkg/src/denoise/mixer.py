"""
Multi-noise mixing and dataset manifests.

A corrupted utterance is the clean signal plus one to four noises, each
looped from its own start offset to the clean length, summed with unit
weights and scaled once so that the full-utterance SNR equals the
requested value.

Manifests describe every corrupted utterance of a split reproducibly: the
entry seed derives from (global_seed, index), and the entry records the
files, SNR and offsets it was drawn with, so synthesis replays it without
any randomness.

Manifest file format (JSON Lines):
    {"manifest": {"split": ..., "global_seed": ..., "corpus_root": ...}}
    {"id": ..., "clean": ..., "noises": [...], "snr_db": ..., "offsets": [...],
     "seed": ...}
    ...
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .audio_io import read_wav, wav_length
from .errors import (
    CountTooSmall,
    DataError,
    EmptyCorpus,
    IoFailure,
    SilentClean,
    SilentNoiseMixture,
)
from .models import (
    MAX_NOISES,
    SNR_GRID_DB,
    SPLITS,
    AudioSignal,
    DatasetManifest,
    MixSpec,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SILENCE_POWER = 1e-12

TRAIN_SNR_RANGE_DB = (-5.0, 20.0)


@dataclass(eq=False)
class MixResult:
    """
    Output of one mix.

    Attributes:
        noisy: clean + scaled_noise.
        scaled_noise: Noise actually added, defined as noisy - clean so the
            identity holds bit for bit.
        offsets: Start sample used in each noise.
        gain: Scale applied to the unit-weight noise sum.
    """

    noisy: AudioSignal
    scaled_noise: AudioSignal
    offsets: List[int]
    gain: float


def _loop(noise: AudioSignal, offset: int, length: int) -> np.ndarray:
    """Noise samples offset..offset+length, wrapping around the end."""
    idx = (offset + np.arange(length)) % len(noise)
    return noise.samples[idx]


def mix(
    clean: AudioSignal,
    noises: Sequence[AudioSignal],
    snr_db: float,
    rng: Optional[np.random.Generator] = None,
    offsets: Optional[Sequence[int]] = None,
) -> MixResult:
    """
    Corrupt clean speech with several noises at one SNR.

    Args:
        clean: Clean utterance.
        noises: One to four noise signals.
        snr_db: Requested ratio of clean power to added noise power.
        rng: Draws the offsets when none are given.
        offsets: Explicit start sample per noise.

    Returns:
        MixResult with noisy, scaled noise, offsets and gain.

    Raises:
        DataError: No noise, more than four, an empty noise, or an offsets
            list of the wrong length.
        SilentClean: The clean power is at most 1e-12.
        SilentNoiseMixture: The summed noise power is at most 1e-12.
    """
    if not 1 <= len(noises) <= MAX_NOISES:
        raise DataError(f"expected 1-{MAX_NOISES} noises, got {len(noises)}")
    if any(len(n) == 0 for n in noises):
        raise DataError("noise signals must not be empty")

    clean_power = clean.power()
    if clean_power <= SILENCE_POWER:
        raise SilentClean(f"clean power {clean_power:.3g} is too small for an SNR")

    if offsets is None:
        rng = rng if rng is not None else np.random.default_rng()
        offsets = [int(rng.integers(0, len(n))) for n in noises]
    elif len(offsets) != len(noises):
        raise DataError(f"{len(offsets)} offsets for {len(noises)} noises")
    offsets = [int(o) for o in offsets]

    mixture = np.zeros(len(clean))
    for noise, offset in zip(noises, offsets):
        mixture += _loop(noise, offset, len(clean))

    mixture_power = float(np.mean(mixture**2))
    if mixture_power <= SILENCE_POWER:
        raise SilentNoiseMixture(
            f"noise mixture power {mixture_power:.3g} is too small to scale"
        )

    gain = float(np.sqrt(clean_power / (mixture_power * 10.0 ** (snr_db / 10.0))))
    noisy = clean.samples + gain * mixture
    return MixResult(
        noisy=AudioSignal(noisy, clean.sample_rate_hz),
        scaled_noise=AudioSignal(noisy - clean.samples, clean.sample_rate_hz),
        offsets=offsets,
        gain=gain,
    )


def measured_snr_db(clean: AudioSignal, scaled_noise: AudioSignal) -> float:
    """10 log10 of clean power over added noise power."""
    return float(10.0 * np.log10(clean.power() / scaled_noise.power()))


def entry_seed(global_seed: int, index: int) -> int:
    """Seed of manifest entry `index`."""
    state = np.random.SeedSequence([int(global_seed), int(index)]).generate_state(1)
    return int(state[0])


def _relative(path: Path, root: Optional[Path]) -> str:
    if root is None:
        return path.as_posix()
    try:
        return path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return path.resolve().as_posix()


def build_manifest(
    clean_corpus: Sequence[PathLike],
    noise_corpus: Sequence[PathLike],
    split: str,
    count: int,
    global_seed: int,
    corpus_root: Optional[PathLike] = None,
) -> DatasetManifest:
    """
    Draw `count` mix descriptions for one split.

    Clean files are used in corpus order, cycling when count exceeds the
    corpus. Each entry draws from its own generator: a noise count uniform
    on 1..4 (capped at the corpus size), that many distinct noises, an SNR
    (uniform on [-5, 20] dB for train, the fixed grid in turn otherwise)
    and one offset per noise uniform over that noise's length.

    Args:
        clean_corpus: Clean speech WAV files.
        noise_corpus: Noise WAV files of this split's pool.
        split: "train", "validation" or "test".
        count: Number of entries.
        global_seed: Seed all entry seeds derive from.
        corpus_root: Recorded paths are made relative to this directory.

    Raises:
        EmptyCorpus: Either corpus is empty.
        CountTooSmall: count < 1, or a validation/test manifest that cannot
            cover every grid SNR.
    """
    if split not in SPLITS:
        raise DataError(f"unknown split '{split}'")
    if not clean_corpus:
        raise EmptyCorpus("clean corpus is empty")
    if not noise_corpus:
        raise EmptyCorpus("noise corpus is empty")
    minimum = 1 if split == "train" else len(SNR_GRID_DB)
    if count < minimum:
        raise CountTooSmall(
            f"{split} manifest needs at least {minimum} entries, got {count}"
        )

    root = Path(corpus_root) if corpus_root is not None else None
    clean_paths = [Path(p) for p in clean_corpus]
    noise_paths = [Path(p) for p in noise_corpus]
    noise_lengths: Dict[int, int] = {}

    entries = []
    for index in range(count):
        seed = entry_seed(global_seed, index)
        rng = np.random.default_rng(seed)

        n_noises = min(int(rng.integers(1, MAX_NOISES + 1)), len(noise_paths))
        chosen = [int(i) for i in rng.choice(len(noise_paths), n_noises, replace=False)]
        if split == "train":
            snr_db = float(rng.uniform(*TRAIN_SNR_RANGE_DB))
        else:
            snr_db = float(SNR_GRID_DB[index % len(SNR_GRID_DB)])

        offsets = []
        for i in chosen:
            if i not in noise_lengths:
                noise_lengths[i] = wav_length(noise_paths[i])
            offsets.append(int(rng.integers(0, max(noise_lengths[i], 1))))

        entries.append(
            MixSpec(
                utterance_id=f"{split}_{index:05d}",
                clean=_relative(clean_paths[index % len(clean_paths)], root),
                noises=[_relative(noise_paths[i], root) for i in chosen],
                snr_db=snr_db,
                offsets=offsets,
                seed=seed,
            )
        )

    logger.info("built %s manifest with %d entries", split, count)
    return DatasetManifest(
        entries=entries,
        split=split,
        global_seed=int(global_seed),
        corpus_root=None if root is None else root.as_posix(),
    )


def resolve(path: str, corpus_root: Optional[PathLike]) -> Path:
    """Absolute location of a manifest path."""
    p = Path(path)
    if p.is_absolute() or corpus_root is None:
        return p
    return Path(corpus_root) / p


def synthesize(spec: MixSpec, corpus_root: Optional[PathLike] = None) -> MixResult:
    """Replay one manifest entry from its recorded files and offsets."""
    clean = read_wav(resolve(spec.clean, corpus_root))
    noises = [read_wav(resolve(n, corpus_root)) for n in spec.noises]
    return mix(clean, noises, spec.snr_db, offsets=spec.offsets)


def save_manifest(manifest: DatasetManifest, path: PathLike) -> None:
    """
    Write a manifest as JSON Lines.

    Raises:
        IoFailure: The file cannot be written.
    """
    header = {
        "manifest": {
            "split": manifest.split,
            "global_seed": manifest.global_seed,
            "corpus_root": manifest.corpus_root,
        }
    }
    lines = [json.dumps(header)]
    lines += [json.dumps(entry.to_record()) for entry in manifest.entries]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def load_manifest(path: PathLike) -> DatasetManifest:
    """
    Read a manifest written by save_manifest.

    Raises:
        IoFailure: The file cannot be read.
        DataError: The file is not a valid manifest.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc

    lines = [line for line in text.splitlines() if line.strip()]
    try:
        records = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON on a manifest line: {exc}") from exc
    if not records or "manifest" not in records[0]:
        raise DataError(f"{path}: missing manifest header line")

    header = records[0]["manifest"]
    try:
        return DatasetManifest(
            entries=[MixSpec.from_record(r) for r in records[1:]],
            split=header["split"],
            global_seed=int(header["global_seed"]),
            corpus_root=header.get("corpus_root"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed manifest header: {exc}") from exc
