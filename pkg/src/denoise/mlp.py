"""
Feedforward regression network with hand-written backpropagation.

The network maps normalised noisy feature vectors to normalised clean
log-power frames: affine + sigmoid for every hidden layer, affine identity
at the output. Training minimises

    (1/K) sum_k || w_k * (s_hat_k - s_k) ||^2 + l2 * sum_l ||W_l||^2

over minibatches of size K with plain SGD. With w = 1 this is the plain
mean squared error; per-bin weights give the weighted variant. Biases are
not regularised.

Classes:
    FeatureNorm: Per-dimension mean/std of inputs and targets.
    MlpModel: Layer parameters, activations, normalisation and metadata.
    Gradients: Per-layer parameter gradients.
    TrainConfig: Minibatch size, L2, learning-rate schedule, epochs, loss.
    TrainingData: Input/target rows with optional per-row weights.
    EpochRecord: One row of the training history.
"""

import copy
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import (
    BadDims,
    ChecksumMismatch,
    ConfigError,
    DimMismatch,
    DivergedLoss,
    EmptyDataset,
    IoFailure,
    VersionMismatch,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

STD_FLOOR = 1e-6

LOSS_MODES = ("mse", "weighted")
WEIGHT_SOURCES = ("ath", "masking")


@dataclass(eq=False)
class FeatureNorm:
    """
    Mean-variance normalisation statistics.

    Attributes:
        input_mean: Per-dimension mean of network inputs.
        input_std: Per-dimension standard deviation of inputs (> 0).
        target_mean: Per-bin mean of targets.
        target_std: Per-bin standard deviation of targets (> 0).
    """

    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray

    def __post_init__(self) -> None:
        for name in ("input_mean", "input_std", "target_mean", "target_std"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if np.any(self.input_std <= 0) or np.any(self.target_std <= 0):
            raise ConfigError("normalisation standard deviations must be > 0")

    @classmethod
    def identity(cls, input_dim: int, output_dim: int) -> "FeatureNorm":
        """Statistics that leave features unchanged."""
        return cls(
            input_mean=np.zeros(input_dim),
            input_std=np.ones(input_dim),
            target_mean=np.zeros(output_dim),
            target_std=np.ones(output_dim),
        )

    @classmethod
    def from_data(cls, inputs: np.ndarray, targets: np.ndarray) -> "FeatureNorm":
        """Estimate statistics from training rows."""
        return cls(
            input_mean=inputs.mean(axis=0),
            input_std=np.maximum(inputs.std(axis=0), STD_FLOOR),
            target_mean=targets.mean(axis=0),
            target_std=np.maximum(targets.std(axis=0), STD_FLOOR),
        )

    def normalize_inputs(self, x: np.ndarray) -> np.ndarray:
        return (x - self.input_mean) / self.input_std

    def normalize_targets(self, s: np.ndarray) -> np.ndarray:
        return (s - self.target_mean) / self.target_std

    def denormalize_targets(self, s: np.ndarray) -> np.ndarray:
        return s * self.target_std + self.target_mean


@dataclass(eq=False)
class MlpModel:
    """
    A feedforward network.

    Weight matrices have shape (fan_in, fan_out) so a batch X of shape
    (K, fan_in) maps to X @ W + b.

    Attributes:
        layer_dims: [input, hidden..., output] widths.
        weights: One matrix per layer.
        biases: One vector per layer.
        hidden_activation: Nonlinearity of hidden layers ("sigmoid").
        output_activation: Output nonlinearity ("identity").
        feature_norm: Normalisation applied around the network at inference.
        metadata: Free-form JSON-serialisable facts (feature mode, selected
            epoch, validation loss).
    """

    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    hidden_activation: str = "sigmoid"
    output_activation: str = "identity"
    feature_norm: Optional[FeatureNorm] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_dims(self.layer_dims)
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(
            self.weights
        ):
            raise BadDims("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise BadDims(
                    f"layer {i}: W {w.shape} / b {b.shape} inconsistent with "
                    f"dims {expected}"
                )
        if self.hidden_activation != "sigmoid":
            raise ConfigError(
                f"unsupported hidden activation '{self.hidden_activation}'"
            )
        if self.output_activation != "identity":
            raise ConfigError(
                f"unsupported output activation '{self.output_activation}'"
            )

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpModel":
        """Deep copy of parameters, normalisation and metadata."""
        return copy.deepcopy(self)

    def norm(self) -> FeatureNorm:
        """The attached normalisation, or identity statistics."""
        if self.feature_norm is None:
            return FeatureNorm.identity(self.input_dim, self.output_dim)
        return self.feature_norm


@dataclass
class Gradients:
    """Gradients with the same layout as MlpModel.weights / biases."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyperparameters.

    Attributes:
        batch_size: Minibatch size K.
        l2: Coefficient of the squared weight norm.
        lr_initial: Learning rate for epochs 1..lr_decay_epoch.
        lr_final: Learning rate afterwards.
        lr_decay_epoch: Last epoch trained with lr_initial.
        epochs: Number of passes over the training data.
        seed: Seeds initialisation and shuffling.
        loss_mode: "mse" or "weighted".
        weight_source: "ath" or "masking" (used when loss_mode is weighted).
        hidden_layers: Widths of the hidden layers.
        invert_masking: Use reciprocal masking weights.
    """

    batch_size: int = 128
    l2: float = 1e-5
    lr_initial: float = 0.05
    lr_final: float = 0.01
    lr_decay_epoch: int = 10
    epochs: int = 40
    seed: int = 0
    loss_mode: str = "mse"
    weight_source: str = "ath"
    hidden_layers: Tuple[int, ...] = (2048, 2048, 2048)
    invert_masking: bool = False

    def __post_init__(self) -> None:
        widths = tuple(int(h) for h in self.hidden_layers)
        object.__setattr__(self, "hidden_layers", widths)
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}")
        if self.weight_source not in WEIGHT_SOURCES:
            raise ConfigError(f"weight_source must be one of {WEIGHT_SOURCES}")
        if any(h < 1 for h in self.hidden_layers):
            raise ConfigError(f"hidden layer widths must be >= 1: {self.hidden_layers}")

    @property
    def loss_name(self) -> str:
        """Command-line name of the objective: mse, ath or masking."""
        return "mse" if self.loss_mode == "mse" else self.weight_source

    def learning_rate(self, epoch: int) -> float:
        """Learning rate of a 1-based epoch."""
        return self.lr_initial if epoch <= self.lr_decay_epoch else self.lr_final


@dataclass(eq=False)
class TrainingData:
    """
    Rows of (input, target) with optional loss weights.

    Attributes:
        inputs: M x input_dim matrix.
        targets: M x output_dim matrix.
        weights: None, an output_dim vector shared by all rows, or an
            M x output_dim matrix.
    """

    inputs: np.ndarray
    targets: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise DimMismatch(
                f"{self.inputs.shape[0]} input rows vs {self.targets.shape[0]} targets"
            )
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    def batch_weights(self, rows: np.ndarray) -> Optional[np.ndarray]:
        """Weights for the selected rows."""
        if self.weights is None or self.weights.ndim == 1:
            return self.weights
        return self.weights[rows]


@dataclass
class EpochRecord:
    """One row of training history."""

    epoch: int
    train_loss: float
    val_loss: float
    lr: float


def _check_dims(layer_dims: Sequence[int]) -> None:
    if len(layer_dims) < 2:
        raise BadDims(f"need at least input and output dims, got {list(layer_dims)}")
    if any(int(d) < 1 for d in layer_dims):
        raise BadDims(f"layer dims must be >= 1, got {list(layer_dims)}")


def init_model(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """
    Randomly initialised network.

    W_l ~ Uniform(+-sqrt(6 / (fan_in + fan_out))), b_l = 0. The same seed
    always yields the same parameters.

    Raises:
        BadDims: Fewer than two dims or a non-positive width.
    """
    _check_dims(layer_dims)
    dims = [int(d) for d in layer_dims]
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_dims=dims, weights=weights, biases=biases)


def _activations(model: MlpModel, batch: np.ndarray) -> List[np.ndarray]:
    """Layer outputs [input, hidden_1, ..., output]."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[1] != model.input_dim:
        raise DimMismatch(
            f"network expects {model.input_dim} inputs, got {batch.shape[1]}"
        )
    outputs = [batch]
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = outputs[-1] @ w + b
        outputs.append(z if i == last else expit(z))
    return outputs


def forward(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """
    Network output for a K x input batch, in normalised target space.

    Raises:
        DimMismatch: The batch width differs from the input dimension.
    """
    return _activations(model, batch)[-1]


def _squared_weight_norm(model: MlpModel) -> float:
    return float(sum(np.sum(w**2) for w in model.weights))


def loss_and_grad(
    model: MlpModel,
    batch_in: np.ndarray,
    batch_target: np.ndarray,
    weights: Optional[np.ndarray] = None,
    l2: float = 0.0,
) -> Tuple[float, Gradients]:
    """
    Minibatch objective and its gradients by backpropagation.

    Args:
        model: Network to differentiate.
        batch_in: K x input matrix.
        batch_target: K x output matrix.
        weights: None (plain squared error), an output-length vector, or a
            K x output matrix of per-row weights.
        l2: Weight-decay coefficient.

    Returns:
        (loss, gradients).

    Raises:
        DimMismatch: Shapes are inconsistent.
    """
    outputs = _activations(model, batch_in)
    prediction = outputs[-1]
    target = np.atleast_2d(np.asarray(batch_target, dtype=np.float64))
    if target.shape != prediction.shape:
        raise DimMismatch(
            f"targets {target.shape} do not match outputs {prediction.shape}"
        )
    if weights is None:
        w2 = 1.0
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape[-1] != model.output_dim or (
            weights.ndim == 2 and weights.shape[0] != target.shape[0]
        ):
            raise DimMismatch(
                f"weights {weights.shape} incompatible with outputs {prediction.shape}"
            )
        w2 = weights**2

    k = target.shape[0]
    diff = prediction - target
    loss = float(np.sum(w2 * diff**2)) / k + l2 * _squared_weight_norm(model)

    delta = 2.0 * w2 * diff / k
    grad_w: List[np.ndarray] = [np.empty(0)] * model.n_layers
    grad_b: List[np.ndarray] = [np.empty(0)] * model.n_layers
    for i in range(model.n_layers - 1, -1, -1):
        grad_w[i] = outputs[i].T @ delta + 2.0 * l2 * model.weights[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            hidden = outputs[i]
            delta = (delta @ model.weights[i].T) * hidden * (1.0 - hidden)

    return loss, Gradients(weights=grad_w, biases=grad_b)


def data_loss(
    model: MlpModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    weights: Optional[np.ndarray] = None,
) -> float:
    """Mean (weighted) squared error without the L2 term."""
    diff = forward(model, inputs) - targets
    w2 = 1.0 if weights is None else np.asarray(weights) ** 2
    return float(np.sum(w2 * diff**2)) / diff.shape[0]


def sgd_step(model: MlpModel, grads: Gradients, lr: float) -> None:
    """theta <- theta - lr * grad, in place."""
    for i in range(model.n_layers):
        model.weights[i] -= lr * grads.weights[i]
        model.biases[i] -= lr * grads.biases[i]


def _normalized(data: TrainingData, norm: FeatureNorm) -> TrainingData:
    return TrainingData(
        inputs=norm.normalize_inputs(data.inputs),
        targets=norm.normalize_targets(data.targets),
        weights=data.weights,
    )


def train(
    model: MlpModel,
    train_set: TrainingData,
    validation_set: TrainingData,
    cfg: TrainConfig,
) -> Tuple[MlpModel, List[EpochRecord]]:
    """
    Minibatch SGD with validation-based model selection.

    Features are normalised with model.feature_norm (computed beforehand
    from the training set only). Each epoch shuffles the training rows with
    a generator seeded from cfg.seed, applies one SGD update per minibatch
    and evaluates the validation data term. The snapshot with the lowest
    validation loss is returned; ties keep the earlier epoch.

    Returns:
        (best_model, history). best_model.metadata records "epoch" and
        "val_loss" of the selected snapshot.

    Raises:
        EmptyDataset: Either set has no rows.
        DivergedLoss: A minibatch or validation loss is not finite.
    """
    if len(train_set) == 0 or len(validation_set) == 0:
        raise EmptyDataset("training and validation sets must be non-empty")

    norm = model.norm()
    train_n = _normalized(train_set, norm)
    val_n = _normalized(validation_set, norm)

    working = model.copy()
    rng = np.random.default_rng(cfg.seed)
    history: List[EpochRecord] = []
    best: Optional[MlpModel] = None
    best_loss = np.inf
    n = len(train_n)

    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate(epoch)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grad(
                working,
                train_n.inputs[rows],
                train_n.targets[rows],
                train_n.batch_weights(rows),
                cfg.l2,
            )
            if not np.isfinite(loss):
                raise DivergedLoss(f"non-finite training loss in epoch {epoch}")
            sgd_step(working, grads, lr)
            total += loss * rows.shape[0]

        train_loss = total / n
        val_loss = data_loss(working, val_n.inputs, val_n.targets, val_n.weights)
        if not np.isfinite(val_loss):
            raise DivergedLoss(f"non-finite validation loss in epoch {epoch}")

        history.append(
            EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=lr)
        )
        logger.info(
            "epoch %d/%d lr=%g train_loss=%.6f val_loss=%.6f",
            epoch,
            cfg.epochs,
            lr,
            train_loss,
            val_loss,
        )

        if val_loss < best_loss:
            best_loss = val_loss
            best = working.copy()
            best.metadata.update({"epoch": epoch, "val_loss": val_loss})

    logger.info("selected epoch %d (val_loss=%.6f)", best.metadata["epoch"], best_loss)
    return best, history


# Serialisation


def _parameter_bytes(
    weights: List[np.ndarray], biases: List[np.ndarray], norm: Optional[FeatureNorm]
) -> bytes:
    arrays = [a for pair in zip(weights, biases) for a in pair]
    if norm is not None:
        arrays += [norm.input_mean, norm.input_std, norm.target_mean, norm.target_std]
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def _checksum(
    weights: List[np.ndarray], biases: List[np.ndarray], norm: Optional[FeatureNorm]
) -> int:
    return zlib.crc32(_parameter_bytes(weights, biases, norm)) & 0xFFFFFFFF


def save_model(model: MlpModel, path: Union[str, Path]) -> None:
    """
    Write a model as a versioned JSON document.

    Floats are written with their shortest round-tripping repr, so loading
    restores parameters bit for bit.

    Raises:
        IoFailure: The file cannot be written.
    """
    norm = model.feature_norm
    document = {
        "format_version": FORMAT_VERSION,
        "layer_dims": list(model.layer_dims),
        "activation": {
            "hidden": model.hidden_activation,
            "output": model.output_activation,
        },
        "feature_norm": None
        if norm is None
        else {
            "mean": norm.input_mean.tolist(),
            "std": norm.input_std.tolist(),
            "target_mean": norm.target_mean.tolist(),
            "target_std": norm.target_std.tolist(),
        },
        "layers": [
            {"w": w.ravel().tolist(), "b": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
        "metadata": model.metadata,
        "checksum": _checksum(model.weights, model.biases, norm),
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write model {path}: {exc}") from exc


def load_model(path: Union[str, Path]) -> MlpModel:
    """
    Read a model written by save_model.

    Raises:
        IoFailure: The file cannot be read.
        VersionMismatch: Unsupported format_version.
        ChecksumMismatch: The file is truncated, malformed, or its
            parameters do not match the stored CRC32.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChecksumMismatch(f"{path}: truncated or corrupt model file") from exc

    version = document.get("format_version") if isinstance(document, dict) else None
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format_version {version!r}, expected {FORMAT_VERSION}"
        )

    try:
        dims = [int(d) for d in document["layer_dims"]]
        weights = [
            np.asarray(layer["w"], dtype=np.float64).reshape(dims[i], dims[i + 1])
            for i, layer in enumerate(document["layers"])
        ]
        biases = [
            np.asarray(layer["b"], dtype=np.float64) for layer in document["layers"]
        ]
        raw_norm = document["feature_norm"]
        norm = (
            None
            if raw_norm is None
            else FeatureNorm(
                input_mean=raw_norm["mean"],
                input_std=raw_norm["std"],
                target_mean=raw_norm["target_mean"],
                target_std=raw_norm["target_std"],
            )
        )
        stored = int(document["checksum"])
        activation = document["activation"]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ChecksumMismatch(f"{path}: malformed model file: {exc}") from exc

    if _checksum(weights, biases, norm) != stored:
        raise ChecksumMismatch(f"{path}: parameter checksum mismatch")

    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        hidden_activation=activation["hidden"],
        output_activation=activation["output"],
        feature_norm=norm,
        metadata=document.get("metadata", {}),
    )
