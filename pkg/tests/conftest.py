"""Pytest configuration and shared fixtures for denoise tests."""

import numpy as np
import pytest

from denoise import AudioSignal, FeatureConfig, StftConfig, TrackerConfig
from denoise.config import (
    DatasetConfig,
    ExperimentConfig,
    PathsConfig,
    save_config,
)
from denoise.corpus import synth_noise, synth_utterance
from denoise.mlp import TrainConfig

SR = 16000


@pytest.fixture
def rng():
    """Seeded generator so every test is reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def stft_cfg():
    """Default 256/128/256 Hamming STFT."""
    return StftConfig()


@pytest.fixture
def tracker_cfg():
    """Default noise tracker settings."""
    return TrackerConfig()


@pytest.fixture
def tone():
    """One second of a 440 Hz sine at amplitude 0.5."""
    t = np.arange(SR) / SR
    return AudioSignal(0.5 * np.sin(2 * np.pi * 440.0 * t), SR)


@pytest.fixture
def white_noise(rng):
    """One second of white noise at RMS 0.1."""
    return AudioSignal(0.1 * rng.standard_normal(SR), SR)


@pytest.fixture
def speech():
    """Two seconds of synthetic speech with a leading pause."""
    return synth_utterance(np.random.default_rng(7), 2.0)


@pytest.fixture
def office_noise():
    """Three seconds of stationary HVAC noise."""
    return synth_noise("hvac", np.random.default_rng(11), 3.0)


@pytest.fixture
def bd_features():
    """Small-context BD feature configuration."""
    return FeatureConfig(tau=2, input_mode="bd")


@pytest.fixture
def threads(monkeypatch):
    """Run utterance-level work on two threads."""
    monkeypatch.setenv("DENOISE_THREADS", "2")
    return 2


def tiny_config(root, **train_overrides):
    """Experiment small enough to run end to end in seconds."""
    train = dict(
        batch_size=64, epochs=2, lr_decay_epoch=1, hidden_layers=(16,), seed=0
    )
    train.update(train_overrides)
    paths = PathsConfig().resolved(root)
    return ExperimentConfig(
        features=FeatureConfig(tau=1, input_mode="bd"),
        train=TrainConfig(**train),
        dataset=DatasetConfig(train_count=4, validation_count=6, test_count=6),
        paths=paths,
    )


@pytest.fixture
def tiny_experiment(tmp_path):
    """Tiny experiment config saved as TOML under tmp_path."""
    cfg = tiny_config(tmp_path)
    path = tmp_path / "experiment.toml"
    save_config(cfg, path)
    return path, cfg


@pytest.fixture(scope="session")
def make_tiny_config():
    """Factory for tiny experiment configs rooted at a given directory."""
    return tiny_config
