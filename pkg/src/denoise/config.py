"""
Experiment configuration.

An ExperimentConfig bundles every parameter of an experiment in one TOML
file, one table per section:

    [stft]      window_len, hop, dft_size, window_kind, power_floor, ...
    [features]  tau, input_mode, frames
    [train]     batch_size, l2, lr_initial, lr_final, lr_decay_epoch,
                epochs, seed, loss_mode, weight_source, hidden_layers,
                invert_masking
    [tracker]   xi_opt_db, speech_prior, alpha_noise, alpha_presence,
                stuck_limit
    [logmmse]   alpha, xi_min_db, gain_floor_db
    [dataset]   train_count, validation_count, test_count, global_seed,
                corpus_seed
    [paths]     corpus and output locations

Omitted keys keep their defaults; unknown sections or keys are rejected.
Relative paths are resolved against the directory of the config file.

Example:
    >>> cfg = load_config("configs/desk.toml")
    >>> cfg = apply_overrides(cfg, mode="bed", loss="ath")
"""

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import tomli_w

from .errors import ConfigError
from .features import INPUT_MODES, LOSS_NAMES, FeatureConfig
from .logmmse import LogMmseConfig
from .mlp import TrainConfig
from .models import StftConfig
from .noise_estimation import TrackerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PathLike = Union[str, Path]

THREADS_ENV = "DENOISE_THREADS"


@dataclass(frozen=True)
class DatasetConfig:
    """
    Corpus and manifest sizes.

    Attributes:
        train_count: Training mixes.
        validation_count: Validation mixes (at least one per grid SNR).
        test_count: Test mixes (at least one per grid SNR).
        global_seed: Seed of the manifest entries.
        corpus_seed: Seed of the synthetic corpus, which holds one clean
            utterance per mix of each split.
    """

    train_count: int = 200
    validation_count: int = 30
    test_count: int = 30
    global_seed: int = 0
    corpus_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("train_count", "validation_count", "test_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    def count(self, split: str) -> int:
        return {
            "train": self.train_count,
            "validation": self.validation_count,
            "test": self.test_count,
        }[split]


@dataclass(frozen=True)
class PathsConfig:
    """
    File system locations.

    `model` and `enhanced` are templates; {label} expands to the system
    label such as "bed_ath" or "logmmse".

    Attributes:
        corpus_root: Root the manifest paths are relative to.
        clean_train: Clean training utterances.
        clean_validation: Clean validation utterances.
        clean_test: Clean test utterances.
        noise_train: Training noise pool.
        noise_test: Test noise pool (also used for validation).
        mixes: Manifests and noisy audio, one subdirectory per split.
        model: Model file template.
        enhanced: Enhanced audio directory template.
        reports: Metrics CSVs and training histories.
    """

    corpus_root: str = "corpus"
    clean_train: str = "corpus/clean/train"
    clean_validation: str = "corpus/clean/validation"
    clean_test: str = "corpus/clean/test"
    noise_train: str = "corpus/noise/train"
    noise_test: str = "corpus/noise/test"
    mixes: str = "mixes"
    model: str = "models/{label}.json"
    enhanced: str = "enhanced/{label}"
    reports: str = "reports"

    def resolved(self, base_dir: Path) -> "PathsConfig":
        """Copy with every relative path anchored at base_dir."""
        values = {}
        for f in dataclasses.fields(self):
            p = Path(getattr(self, f.name))
            values[f.name] = (p if p.is_absolute() else base_dir / p).as_posix()
        return PathsConfig(**values)

    def clean_dir(self, split: str) -> Path:
        return Path(getattr(self, f"clean_{split}"))

    def noise_dir(self, split: str) -> Path:
        """Training uses the train pool; validation and test the test pool."""
        return Path(self.noise_train if split == "train" else self.noise_test)

    def manifest_path(self, split: str) -> Path:
        return Path(self.mixes) / f"{split}.jsonl"

    def mix_dir(self, split: str) -> Path:
        return Path(self.mixes) / split

    def model_path(self, label: str) -> Path:
        return Path(self.model.format(label=label))

    def enhanced_dir(self, label: str) -> Path:
        return Path(self.enhanced.format(label=label))


@dataclass(frozen=True)
class ExperimentConfig:
    """Every parameter of an experiment."""

    stft: StftConfig = field(default_factory=StftConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    logmmse: LogMmseConfig = field(default_factory=LogMmseConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @property
    def label(self) -> str:
        """System label of the configured network, e.g. "bsd_masking"."""
        return system_label(self.features.input_mode, self.train.loss_name)


_SECTIONS = {
    "stft": StftConfig,
    "features": FeatureConfig,
    "train": TrainConfig,
    "tracker": TrackerConfig,
    "logmmse": LogMmseConfig,
    "dataset": DatasetConfig,
    "paths": PathsConfig,
}


def system_label(input_mode: str, loss: str) -> str:
    """Label such as "bd" or "bsd_ath"; MSE systems carry no loss suffix."""
    return input_mode if loss == "mse" else f"{input_mode}_{loss}"


def full_profile() -> ExperimentConfig:
    """Full-size network: three hidden layers of 2048 units."""
    return ExperimentConfig(train=TrainConfig(hidden_layers=(2048, 2048, 2048)))


def desk_profile() -> ExperimentConfig:
    """Desk-scale network: three hidden layers of 256 units."""
    return ExperimentConfig(train=TrainConfig(hidden_layers=(256, 256, 256)))


def _build_section(name: str, values: Any) -> Any:
    cls = _SECTIONS[name]
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    if "hidden_layers" in values:
        values = dict(values, hidden_layers=tuple(values["hidden_layers"]))
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def config_from_dict(
    document: Dict[str, Any], base_dir: Optional[Path] = None
) -> ExperimentConfig:
    """
    Build a config from parsed TOML.

    Raises:
        ConfigError: Unknown sections or keys, or invalid values.
    """
    unknown = sorted(set(document) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    sections = {name: _build_section(name, values) for name, values in document.items()}
    cfg = ExperimentConfig(**sections)
    if base_dir is not None:
        cfg = dataclasses.replace(cfg, paths=cfg.paths.resolved(base_dir))
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Plain-data form of a config, one table per section."""
    document = {}
    for name in _SECTIONS:
        section = dataclasses.asdict(getattr(cfg, name))
        if "hidden_layers" in section:
            section["hidden_layers"] = list(section["hidden_layers"])
        document[name] = section
    return document


def load_config(path: PathLike) -> ExperimentConfig:
    """
    Read a TOML config file.

    Raises:
        ConfigError: Missing or unparsable file, unknown keys, invalid values.
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            document = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(document, base_dir=path.resolve().parent)


def save_config(cfg: ExperimentConfig, path: PathLike) -> None:
    """Write a config as TOML; load_config restores it unchanged."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(tomli_w.dumps(config_to_dict(cfg)), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write config {path}: {exc}") from exc


def apply_overrides(
    cfg: ExperimentConfig,
    mode: Optional[str] = None,
    loss: Optional[str] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    """
    Apply command-line overrides.

    Args:
        mode: Input mode "bd", "bsd" or "bed".
        loss: "mse", "ath" or "masking".
        seed: Seeds both training and manifest generation.
    """
    if mode is not None:
        if mode not in INPUT_MODES:
            raise ConfigError(f"mode must be one of {INPUT_MODES}, got '{mode}'")
        cfg = dataclasses.replace(
            cfg, features=dataclasses.replace(cfg.features, input_mode=mode)
        )
    if loss is not None:
        if loss not in LOSS_NAMES:
            raise ConfigError(f"loss must be one of {LOSS_NAMES}, got '{loss}'")
        if loss == "mse":
            train = dataclasses.replace(cfg.train, loss_mode="mse")
        else:
            train = dataclasses.replace(
                cfg.train, loss_mode="weighted", weight_source=loss
            )
        cfg = dataclasses.replace(cfg, train=train)
    if seed is not None:
        cfg = dataclasses.replace(
            cfg,
            train=dataclasses.replace(cfg.train, seed=seed),
            dataset=dataclasses.replace(cfg.dataset, global_seed=seed),
        )
    return cfg


def thread_count() -> int:
    """
    Worker threads for utterance-level parallelism.

    DENOISE_THREADS caps it; the default is the CPU count.

    Raises:
        ConfigError: DENOISE_THREADS is not a positive integer.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from exc
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value
