"""
Objective evaluation measures and report tables.

Measures:
    speech_distortion: mean per-frame L1 distance of the estimate to clean.
    noise_reduction: mean per-frame L1 distance of the estimate to noisy.
    stoi: short-time objective intelligibility (standard algorithm).
    segmental_snr: clamped frame-averaged SNR in dB.

Reports:
    UtteranceMetrics: one row per evaluated file.
    MetricsReport: collects rows, aggregates them per (snr_db, mode) and
        writes both tables as CSV.
"""

import csv
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pystoi import stoi as _pystoi

from .dsp import analyze
from .errors import AllSilent, IoFailure, LengthMismatch, ShapeMismatch, TooShort
from .models import AudioSignal, LogPowerSpectrogram, StftConfig

SEGMENT_LEN = 512  # 32 ms at 16 kHz
SEG_SNR_MIN_DB = -10.0
SEG_SNR_MAX_DB = 35.0
SILENCE_POWER = 1e-6  # -60 dBFS mean square

UTTERANCE_HEADER = ("utterance_id", "snr_db", "mode", "stoi", "sd", "nr", "seg_snr_db")
AGGREGATE_HEADER = (
    "snr_db",
    "mode",
    "count",
    "stoi",
    "sd",
    "nr",
    "seg_snr_db",
    "stoi_gain",
)

NOISY_MODE = "noisy"

# pystoi warns and returns a placeholder score in this case
_TOO_SHORT_WARNING = "Not enough STFT frames"


def _check_shapes(a: LogPowerSpectrogram, b: LogPowerSpectrogram) -> None:
    if a.values.shape != b.values.shape:
        raise ShapeMismatch(
            f"spectrogram shapes differ: {a.values.shape} vs {b.values.shape}"
        )


def speech_distortion(est: LogPowerSpectrogram, clean: LogPowerSpectrogram) -> float:
    """
    Mean over frames of the L1 norm of the log-power error to clean.

    Raises:
        ShapeMismatch: The spectrograms differ in shape.
    """
    _check_shapes(est, clean)
    return float(np.abs(est.values - clean.values).sum(axis=1).mean())


def noise_reduction(est: LogPowerSpectrogram, noisy: LogPowerSpectrogram) -> float:
    """
    Mean over frames of the L1 norm of the log-power change from noisy.

    Raises:
        ShapeMismatch: The spectrograms differ in shape.
    """
    _check_shapes(est, noisy)
    return float(np.abs(est.values - noisy.values).sum(axis=1).mean())


def _check_lengths(clean: AudioSignal, processed: AudioSignal) -> None:
    if len(clean) != len(processed):
        raise LengthMismatch(
            f"clean has {len(clean)} samples, processed has {len(processed)}"
        )


def stoi(clean: AudioSignal, processed: AudioSignal) -> float:
    """
    Short-time objective intelligibility of processed against clean.

    Returns:
        Score clamped to [0, 1].

    Raises:
        LengthMismatch: The signals differ in length.
        TooShort: Less than 384 ms of active speech remains after silent
            frame removal.
    """
    _check_lengths(clean, processed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        score = _pystoi(
            clean.samples, processed.samples, clean.sample_rate_hz, extended=False
        )
    if any(_TOO_SHORT_WARNING in str(w.message) for w in caught):
        raise TooShort("not enough active speech frames for STOI")
    return float(np.clip(score, 0.0, 1.0))


def segmental_snr(clean: AudioSignal, processed: AudioSignal) -> float:
    """
    Mean of per-segment SNRs over 32 ms non-overlapping segments.

    Each segment SNR is clamped to [-10, 35] dB; segments whose clean mean
    square is below -60 dBFS are skipped, as is a trailing partial segment.

    Raises:
        LengthMismatch: The signals differ in length.
        AllSilent: No segment has enough clean energy.
    """
    _check_lengths(clean, processed)
    n_segments = len(clean) // SEGMENT_LEN
    usable = n_segments * SEGMENT_LEN
    c = clean.samples[:usable].reshape(n_segments, SEGMENT_LEN)
    e = c - processed.samples[:usable].reshape(n_segments, SEGMENT_LEN)

    active = np.mean(c**2, axis=1) >= SILENCE_POWER
    if not np.any(active):
        raise AllSilent("every segment of the clean signal is below -60 dBFS")

    signal_energy = np.sum(c[active] ** 2, axis=1)
    error_energy = np.sum(e[active] ** 2, axis=1)
    with np.errstate(divide="ignore"):
        ratio_db = 10.0 * np.log10(signal_energy / error_energy)
    return float(np.clip(ratio_db, SEG_SNR_MIN_DB, SEG_SNR_MAX_DB).mean())


@dataclass
class UtteranceMetrics:
    """
    Scores of one processed utterance.

    Attributes:
        utterance_id: Manifest id.
        snr_db: Requested mixing SNR.
        mode: System label ("noisy", "logmmse", "bd", ...).
        stoi: Intelligibility in [0, 1].
        sd: Speech distortion (>= 0).
        nr: Noise reduction (>= 0).
        seg_snr_db: Segmental SNR in dB.
    """

    utterance_id: str
    snr_db: float
    mode: str
    stoi: float
    sd: float
    nr: float
    seg_snr_db: float

    def as_row(self) -> Tuple:
        return (
            self.utterance_id,
            self.snr_db,
            self.mode,
            self.stoi,
            self.sd,
            self.nr,
            self.seg_snr_db,
        )


@dataclass
class AggregateRow:
    """Means of one (snr_db, mode) group."""

    snr_db: float
    mode: str
    count: int
    stoi: float
    sd: float
    nr: float
    seg_snr_db: float
    stoi_gain: Optional[float] = None

    def as_row(self) -> Tuple:
        return (
            self.snr_db,
            self.mode,
            self.count,
            self.stoi,
            self.sd,
            self.nr,
            self.seg_snr_db,
            "" if self.stoi_gain is None else self.stoi_gain,
        )


def evaluate_utterance(
    utterance_id: str,
    snr_db: float,
    mode: str,
    clean: AudioSignal,
    noisy: AudioSignal,
    processed: AudioSignal,
    stft_cfg: StftConfig,
) -> UtteranceMetrics:
    """
    Score one processed signal.

    SD and NR compare the log-power spectrogram of the processed waveform
    with those of the clean and noisy waveforms.
    """
    _check_lengths(clean, noisy)
    _check_lengths(clean, processed)
    processed_lp = analyze(processed, stft_cfg).log_power
    return UtteranceMetrics(
        utterance_id=utterance_id,
        snr_db=float(snr_db),
        mode=mode,
        stoi=stoi(clean, processed),
        sd=speech_distortion(processed_lp, analyze(clean, stft_cfg).log_power),
        nr=noise_reduction(processed_lp, analyze(noisy, stft_cfg).log_power),
        seg_snr_db=segmental_snr(clean, processed),
    )


@dataclass
class MetricsReport:
    """
    Per-utterance scores of one or more systems.

    Attributes:
        rows: Rows in the order they were added.
    """

    rows: List[UtteranceMetrics] = field(default_factory=list)

    def add(self, row: UtteranceMetrics) -> None:
        self.rows.append(row)

    def extend(self, rows: List[UtteranceMetrics]) -> None:
        self.rows.extend(rows)

    def modes(self) -> List[str]:
        """Distinct modes in first-seen order."""
        return list(OrderedDict.fromkeys(row.mode for row in self.rows))

    def aggregate(self) -> List[AggregateRow]:
        """
        Arithmetic means per (snr_db, mode), sorted by SNR then mode order.

        stoi_gain is the relative STOI change against the "noisy" group of
        the same SNR, and None when no such group exists.
        """
        groups: Dict[Tuple[float, str], List[UtteranceMetrics]] = {}
        for row in self.rows:
            groups.setdefault((row.snr_db, row.mode), []).append(row)

        mode_order = {mode: i for i, mode in enumerate(self.modes())}
        keys = sorted(groups, key=lambda k: (k[0], mode_order[k[1]]))

        result = []
        for snr_db, mode in keys:
            members = groups[(snr_db, mode)]
            mean_stoi = float(np.mean([m.stoi for m in members]))
            result.append(
                AggregateRow(
                    snr_db=snr_db,
                    mode=mode,
                    count=len(members),
                    stoi=mean_stoi,
                    sd=float(np.mean([m.sd for m in members])),
                    nr=float(np.mean([m.nr for m in members])),
                    seg_snr_db=float(np.mean([m.seg_snr_db for m in members])),
                )
            )

        reference = {r.snr_db: r.stoi for r in result if r.mode == NOISY_MODE}
        for r in result:
            base = reference.get(r.snr_db)
            if base is not None and base > 0:
                r.stoi_gain = (r.stoi - base) / base
        return result

    def write_csv(self, path: Union[str, Path]) -> None:
        """Per-utterance table."""
        write_table(path, UTTERANCE_HEADER, [row.as_row() for row in self.rows])

    def write_aggregate_csv(self, path: Union[str, Path]) -> None:
        """Aggregate table keyed by (snr_db, mode)."""
        write_table(
            path, AGGREGATE_HEADER, [row.as_row() for row in self.aggregate()]
        )


def write_table(path: Union[str, Path], header: Tuple[str, ...], rows: List) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
