"""
WAV reading and writing.

Only mono 16 kHz files are accepted; the pipeline never resamples. Reads
accept 16-bit PCM and 32-bit IEEE float, writes always produce 16-bit PCM
with saturation.
"""

from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf

from .errors import CorruptFile, IoFailure, UnsupportedFormat
from .models import SAMPLE_RATE_HZ, AudioSignal

PathLike = Union[str, Path]

PCM_SCALE = 32768.0

# soundfile subtype -> dtype to decode with
_READ_SUBTYPES = {"PCM_16": "int16", "FLOAT": "float32"}
_WAV_FORMATS = ("WAV", "WAVEX")


def _info(path: Path):
    if not path.is_file():
        raise IoFailure(f"no such audio file: {path}")
    try:
        return sf.info(str(path))
    except RuntimeError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc


def read_wav(path: PathLike) -> AudioSignal:
    """
    Read a mono 16 kHz WAV file.

    Args:
        path: File to read.

    Returns:
        AudioSignal with samples in [-1, 1]; 16-bit PCM is divided by 32768.

    Raises:
        UnsupportedFormat: Wrong sample rate, channel count or encoding.
            Resample or downmix externally.
        CorruptFile: The container cannot be parsed.
        IoFailure: The file does not exist.
    """
    path = Path(path)
    info = _info(path)

    if info.format not in _WAV_FORMATS:
        raise UnsupportedFormat(f"{path}: expected RIFF/WAVE, got {info.format}")
    if info.channels != 1:
        raise UnsupportedFormat(f"{path}: expected mono, got {info.channels} channels")
    if info.samplerate != SAMPLE_RATE_HZ:
        raise UnsupportedFormat(
            f"{path}: expected {SAMPLE_RATE_HZ} Hz, got {info.samplerate} Hz"
        )
    if info.subtype not in _READ_SUBTYPES:
        raise UnsupportedFormat(
            f"{path}: expected PCM_16 or FLOAT samples, got {info.subtype}"
        )

    try:
        data, _ = sf.read(str(path), dtype=_READ_SUBTYPES[info.subtype])
    except RuntimeError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc

    if info.subtype == "PCM_16":
        samples = data.astype(np.float64) / PCM_SCALE
    else:
        samples = data.astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise CorruptFile(f"{path}: non-finite float samples")

    return AudioSignal(samples=samples, sample_rate_hz=info.samplerate)


def quantize(samples: np.ndarray) -> np.ndarray:
    """Clip to [-1, 1] and convert to int16, saturating at +32767."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    scaled = np.round(clipped * PCM_SCALE)
    return np.clip(scaled, -PCM_SCALE, PCM_SCALE - 1).astype(np.int16)


def write_wav(signal: AudioSignal, path: PathLike) -> None:
    """
    Write a signal as 16-bit PCM mono WAV.

    Samples are clipped to [-1, 1] before quantization, so overshoot
    saturates instead of wrapping.

    Raises:
        IoFailure: The destination cannot be written.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        sf.write(
            str(path),
            quantize(signal.samples),
            signal.sample_rate_hz,
            subtype="PCM_16",
            format="WAV",
        )
    except (OSError, RuntimeError) as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def wav_length(path: PathLike) -> int:
    """Number of sample frames in a WAV file, read from its header."""
    return int(_info(Path(path)).frames)
