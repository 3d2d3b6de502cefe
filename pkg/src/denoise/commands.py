"""
Experiment commands.

Each command is a pure function of an ExperimentConfig and the files it
reads: rerunning it with the same configuration rewrites byte-identical
artifacts. Utterance-level work runs on a thread pool capped by
DENOISE_THREADS; results are always gathered in manifest order.

Commands:
    cmd_corpus: write the synthetic desk-scale corpus.
    cmd_mix: build a split's manifest and synthesise its noisy audio.
    cmd_train: train a network on the train/validation mixes.
    cmd_enhance: enhance a split (or explicit files) with a network or the
        Log-MMSE baseline.
    cmd_evaluate: score enhanced audio against clean references.
    cmd_spectrogram: render a spectrogram comparison figure.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

from .audio_io import read_wav, write_wav
from .config import ExperimentConfig, thread_count
from .corpus import CorpusLayout, generate_corpus
from .dsp import analyze
from .enhancer import Enhancer
from .errors import DimMismatch, EmptyCorpus, MissingEnhanced
from .export import SpectrogramExporter
from .features import PairSet, compute_feature_norm, feature_dim, make_training_pairs
from .metrics import (
    NOISY_MODE,
    MetricsReport,
    UtteranceMetrics,
    evaluate_utterance,
    write_table,
)
from .mixer import (
    build_manifest,
    load_manifest,
    measured_snr_db,
    resolve,
    save_manifest,
    synthesize,
)
from .mlp import EpochRecord, MlpModel, init_model, load_model, save_model, train
from .models import SPLITS, AudioSignal, DatasetManifest, MixSpec
from .psychoacoustics import ath_weights

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")
R = TypeVar("R")

STATS_HEADER = ("id", "requested_snr_db", "measured_snr_db")
HISTORY_HEADER = ("epoch", "train_loss", "val_loss", "lr")

ENHANCED_SUFFIX = ".enh.wav"
LOGMMSE = "logmmse"


def map_ordered(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """fn over items on up to DENOISE_THREADS threads, results in input order."""
    workers = min(thread_count(), max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _wav_files(directory: Path) -> List[Path]:
    return sorted(directory.glob("*.wav")) if directory.is_dir() else []


def noisy_path(cfg: ExperimentConfig, split: str, utterance_id: str) -> Path:
    return cfg.paths.mix_dir(split) / f"{utterance_id}.wav"


def enhanced_name(stem: str) -> str:
    return f"{stem}{ENHANCED_SUFFIX}"


def _clean_signal(manifest: DatasetManifest, entry: MixSpec) -> AudioSignal:
    return read_wav(resolve(entry.clean, manifest.corpus_root))


def cmd_corpus(cfg: ExperimentConfig) -> CorpusLayout:
    """Write the synthetic corpus under paths.corpus_root."""
    counts = {split: cfg.dataset.count(split) for split in SPLITS}
    layout = generate_corpus(cfg.paths.corpus_root, counts, cfg.dataset.corpus_seed)
    logger.info("corpus written to %s", layout.root)
    return layout


def cmd_mix(
    cfg: ExperimentConfig, split: str, count: Optional[int] = None
) -> DatasetManifest:
    """
    Build, save and synthesise one split.

    Writes <mixes>/<split>.jsonl, one noisy WAV per entry under
    <mixes>/<split>/ and <mixes>/<split>_stats.csv with the requested and
    measured SNR of every file.

    Raises:
        EmptyCorpus: No clean or noise files for the split.
        CountTooSmall: Too few entries to cover the SNR grid.
        IoFailure: A file cannot be read or written.
    """
    clean = _wav_files(cfg.paths.clean_dir(split))
    noises = _wav_files(cfg.paths.noise_dir(split))
    if not clean:
        raise EmptyCorpus(f"no clean WAV files in {cfg.paths.clean_dir(split)}")
    if not noises:
        raise EmptyCorpus(f"no noise WAV files in {cfg.paths.noise_dir(split)}")

    manifest = build_manifest(
        clean,
        noises,
        split,
        count if count is not None else cfg.dataset.count(split),
        cfg.dataset.global_seed,
        corpus_root=cfg.paths.corpus_root,
    )
    save_manifest(manifest, cfg.paths.manifest_path(split))

    def synthesize_entry(entry: MixSpec) -> Tuple:
        result = synthesize(entry, manifest.corpus_root)
        write_wav(result.noisy, noisy_path(cfg, split, entry.utterance_id))
        clean_signal = _clean_signal(manifest, entry)
        return (
            entry.utterance_id,
            entry.snr_db,
            measured_snr_db(clean_signal, result.scaled_noise),
        )

    stats = map_ordered(synthesize_entry, manifest.entries)
    write_table(Path(cfg.paths.mixes) / f"{split}_stats.csv", STATS_HEADER, stats)
    logger.info("synthesised %d %s mixes", len(stats), split)
    return manifest


def _pairs_for_split(cfg: ExperimentConfig, split: str) -> PairSet:
    manifest = load_manifest(cfg.paths.manifest_path(split))

    def entry_pairs(entry: MixSpec) -> PairSet:
        return make_training_pairs(
            _clean_signal(manifest, entry),
            read_wav(noisy_path(cfg, split, entry.utterance_id)),
            cfg.features,
            cfg.stft,
            loss_mode=cfg.train.loss_name,
            tracker_cfg=cfg.tracker,
            invert_masking=cfg.train.invert_masking,
        )

    return PairSet.concatenate(map_ordered(entry_pairs, manifest.entries))


def cmd_train(cfg: ExperimentConfig) -> Tuple[MlpModel, List[EpochRecord]]:
    """
    Train the configured network and keep the best validation snapshot.

    Writes the model to paths.model (label expanded) and the per-epoch
    history to <reports>/<label>_history.csv.

    Raises:
        EmptyDataset: A split yields no training pairs.
        DivergedLoss: Training produced a non-finite loss.
    """
    n_bins = cfg.stft.n_bins
    train_pairs = _pairs_for_split(cfg, "train")
    val_pairs = _pairs_for_split(cfg, "validation")
    logger.info(
        "training %s on %d frames, validating on %d",
        cfg.label,
        len(train_pairs),
        len(val_pairs),
    )

    global_weights = None
    if cfg.train.loss_name == "ath":
        global_weights = ath_weights(cfg.stft).w

    dims = [
        feature_dim(cfg.features.input_mode, cfg.features.tau, n_bins),
        *cfg.train.hidden_layers,
        n_bins,
    ]
    model = init_model(dims, cfg.train.seed)
    model.feature_norm = compute_feature_norm(train_pairs, cfg.features, n_bins)
    model.metadata.update(
        {
            "label": cfg.label,
            "input_mode": cfg.features.input_mode,
            "tau": cfg.features.tau,
            "loss": cfg.train.loss_name,
        }
    )

    best, history = train(
        model,
        train_pairs.to_training_data(global_weights),
        val_pairs.to_training_data(global_weights),
        cfg.train,
    )
    save_model(best, cfg.paths.model_path(cfg.label))
    write_table(
        Path(cfg.paths.reports) / f"{cfg.label}_history.csv",
        HISTORY_HEADER,
        [(r.epoch, r.train_loss, r.val_loss, r.lr) for r in history],
    )
    return best, history


def build_enhancer(cfg: ExperimentConfig, baseline: Optional[str] = None) -> Enhancer:
    """
    Enhancer for the configured network or the named baseline.

    Raises:
        DimMismatch: The stored model was trained for another input layout.
    """
    if baseline == LOGMMSE:
        return Enhancer(None, cfg.features, cfg.stft, cfg.tracker, cfg.logmmse)
    model = load_model(cfg.paths.model_path(cfg.label))
    stored_mode = model.metadata.get("input_mode")
    if stored_mode is not None and stored_mode != cfg.features.input_mode:
        raise DimMismatch(
            f"model was trained with mode '{stored_mode}', "
            f"config asks for '{cfg.features.input_mode}'"
        )
    return Enhancer(model, cfg.features, cfg.stft, cfg.tracker, cfg.logmmse)


def cmd_enhance(
    cfg: ExperimentConfig,
    split: str = "test",
    baseline: Optional[str] = None,
    inputs: Optional[Sequence[PathLike]] = None,
    out_dir: Optional[PathLike] = None,
    spectrograms: Optional[PathLike] = None,
) -> List[Path]:
    """
    Enhance every mix of a split, or the given files.

    Output files are named <stem>.enh.wav and land in out_dir, by default
    paths.enhanced with the system label expanded. With `spectrograms`,
    one clean / noisy / enhanced figure per manifest entry is written there.

    Raises:
        DimMismatch: The model does not fit the configured input mode.
        IoFailure: A file cannot be read or written.
    """
    enhancer = build_enhancer(cfg, baseline)
    label = LOGMMSE if baseline == LOGMMSE else cfg.label
    target = Path(out_dir) if out_dir is not None else cfg.paths.enhanced_dir(label)

    manifest: Optional[DatasetManifest] = None
    if inputs is None:
        manifest = load_manifest(cfg.paths.manifest_path(split))
        jobs = [
            (noisy_path(cfg, split, e.utterance_id), e.utterance_id, e)
            for e in manifest.entries
        ]
    else:
        jobs = [(Path(p), Path(p).stem, None) for p in inputs]

    exporter = SpectrogramExporter()

    def enhance_one(job: Tuple[Path, str, Optional[MixSpec]]) -> Path:
        source, stem, entry = job
        noisy = read_wav(source)
        enhanced = enhancer.enhance(noisy)
        output = target / enhanced_name(stem)
        write_wav(enhanced, output)
        if spectrograms is not None and entry is not None:
            panels = [
                ("clean", analyze(_clean_signal(manifest, entry), cfg.stft).log_power),
                ("noisy", analyze(noisy, cfg.stft).log_power),
                (label, analyze(enhanced, cfg.stft).log_power),
            ]
            exporter.save_png(panels, Path(spectrograms) / f"{stem}.png")
        return output

    outputs = map_ordered(enhance_one, jobs)
    logger.info("enhanced %d files with %s into %s", len(outputs), label, target)
    return outputs


def cmd_evaluate(
    cfg: ExperimentConfig,
    split: str = "test",
    systems: Optional[Dict[str, PathLike]] = None,
    include_noisy: bool = False,
) -> MetricsReport:
    """
    Score enhanced audio of one or more systems against the clean references.

    Writes <reports>/metrics_<split>.csv (one row per utterance and system)
    and <reports>/aggregate_<split>.csv (means per SNR and system).

    Args:
        systems: Label -> directory of <id>.enh.wav files; defaults to the
            configured network's enhanced directory.
        include_noisy: Also score the unprocessed mixes as mode "noisy".

    Raises:
        MissingEnhanced: A manifest entry has no enhanced file for a system.
    """
    manifest = load_manifest(cfg.paths.manifest_path(split))
    if not systems:
        systems = {cfg.label: cfg.paths.enhanced_dir(cfg.label)}
    directories = {label: Path(d) for label, d in systems.items()}

    for label, directory in directories.items():
        missing = [
            e.utterance_id
            for e in manifest.entries
            if not (directory / enhanced_name(e.utterance_id)).is_file()
        ]
        if missing:
            raise MissingEnhanced(
                f"{label}: {len(missing)} enhanced file(s) missing in {directory}, "
                f"first: {missing[0]}"
            )

    def score_entry(entry: MixSpec) -> List[UtteranceMetrics]:
        clean = _clean_signal(manifest, entry)
        noisy = read_wav(noisy_path(cfg, split, entry.utterance_id))
        processed = {}
        if include_noisy:
            processed[NOISY_MODE] = noisy
        for label, directory in directories.items():
            processed[label] = read_wav(directory / enhanced_name(entry.utterance_id))
        return [
            evaluate_utterance(
                entry.utterance_id, entry.snr_db, label, clean, noisy, signal, cfg.stft
            )
            for label, signal in processed.items()
        ]

    report = MetricsReport()
    for rows in map_ordered(score_entry, manifest.entries):
        report.extend(rows)

    reports = Path(cfg.paths.reports)
    report.write_csv(reports / f"metrics_{split}.csv")
    report.write_aggregate_csv(reports / f"aggregate_{split}.csv")
    logger.info("scored %d rows for %s", len(report.rows), ", ".join(report.modes()))
    return report


def cmd_spectrogram(
    cfg: ExperimentConfig, panels: Sequence[Tuple[str, PathLike]], output: PathLike
) -> Path:
    """Render titled WAV files as one stacked spectrogram figure."""
    spectra = [
        (title, analyze(read_wav(path), cfg.stft).log_power) for title, path in panels
    ]
    SpectrogramExporter().save_png(spectra, output)
    return Path(output)
