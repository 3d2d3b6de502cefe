"""
Tests for the feedforward network.

Covers initialisation, the analytic gradients of both objectives against
finite differences, training, and the model file format.
"""

import json

import numpy as np
import pytest

from denoise import (
    FeatureNorm,
    MlpModel,
    TrainConfig,
    TrainingData,
    forward,
    init_model,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from denoise.errors import (
    BadDims,
    ChecksumMismatch,
    ConfigError,
    DimMismatch,
    DivergedLoss,
    EmptyDataset,
    VersionMismatch,
)
from denoise.mlp import sgd_step


def numeric_gradients(model, x, s, weights, l2, eps=1e-6):
    """Central finite differences over every parameter."""
    grads = []
    for params in (model.weights, model.biases):
        layer_grads = []
        for p in params:
            g = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                original = p[idx]
                p[idx] = original + eps
                plus, _ = loss_and_grad(model, x, s, weights, l2)
                p[idx] = original - eps
                minus, _ = loss_and_grad(model, x, s, weights, l2)
                p[idx] = original
                g[idx] = (plus - minus) / (2 * eps)
            layer_grads.append(g)
        grads.append(layer_grads)
    return grads


def flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def regression_problem(rng, rows=400, dim_in=6, dim_out=3):
    x = rng.normal(size=(rows, dim_in))
    mixing = rng.normal(size=(dim_in, dim_out))
    return x, np.tanh(x @ mixing)


class TestInit:
    """Tests for parameter initialisation."""

    def test_shapes_and_zero_biases(self):
        """Weights follow the layer dims; biases start at zero."""
        model = init_model([5, 7, 3], seed=0)
        assert [w.shape for w in model.weights] == [(5, 7), (7, 3)]
        assert all(np.all(b == 0) for b in model.biases)
        assert model.input_dim == 5
        assert model.output_dim == 3

    def test_glorot_bounds(self):
        """Weights stay inside the Glorot-uniform limit."""
        model = init_model([100, 50], seed=1)
        limit = np.sqrt(6.0 / 150)
        assert np.all(np.abs(model.weights[0]) <= limit)
        assert np.abs(model.weights[0]).max() > 0.9 * limit

    def test_seeded(self):
        """The same seed gives identical parameters."""
        a = init_model([4, 8, 2], seed=3)
        b = init_model([4, 8, 2], seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    @pytest.mark.parametrize("dims", [[4], [4, 0, 2], []])
    def test_bad_dims(self, dims):
        """Fewer than two dims or zero widths are rejected."""
        with pytest.raises(BadDims):
            init_model(dims, seed=0)

    def test_inconsistent_parameters(self):
        """Parameter shapes must match the layer dims."""
        with pytest.raises(BadDims):
            MlpModel([2, 3], [np.zeros((3, 2))], [np.zeros(3)])

    def test_unsupported_activation(self):
        """Only sigmoid hidden layers are supported."""
        model = init_model([2, 3, 1], seed=0)
        with pytest.raises(ConfigError):
            MlpModel(model.layer_dims, model.weights, model.biases, "relu")


class TestForward:
    """Tests for inference."""

    def test_output_shape(self, rng):
        """K inputs give K outputs."""
        model = init_model([6, 4, 3], seed=0)
        assert forward(model, rng.normal(size=(10, 6))).shape == (10, 3)

    def test_single_layer_is_affine(self, rng):
        """Without hidden layers the network is affine."""
        model = init_model([3, 2], seed=0)
        model.biases[0][:] = [0.5, -1.0]
        x = rng.normal(size=(4, 3))
        assert np.allclose(forward(model, x), x @ model.weights[0] + [0.5, -1.0])

    def test_zero_parameters_give_zero_output(self, rng):
        """All-zero weights and biases map every input to zero."""
        dims = [5, 4, 4, 3]
        model = MlpModel(
            dims,
            [np.zeros((a, b)) for a, b in zip(dims, dims[1:])],
            [np.zeros(b) for b in dims[1:]],
        )
        assert np.array_equal(forward(model, rng.normal(size=(6, 5))), np.zeros((6, 3)))

    def test_hand_computed_linear_layer(self):
        """W = [[2]], b = [1] maps 3 to 7."""
        model = MlpModel([1, 1], [np.array([[2.0]])], [np.array([1.0])])
        assert forward(model, np.array([[3.0]]))[0, 0] == 7.0

    def test_sigmoid_saturates(self):
        """A huge pre-activation drives the hidden unit to one."""
        model = MlpModel(
            [1, 1, 1],
            [np.array([[1000.0]]), np.array([[1.0]])],
            [np.zeros(1), np.zeros(1)],
        )
        assert abs(forward(model, np.array([[1.0]]))[0, 0] - 1.0) < 1e-9

    def test_wrong_width(self, rng):
        """Inputs of the wrong width are rejected."""
        with pytest.raises(DimMismatch):
            forward(init_model([6, 3], seed=0), rng.normal(size=(2, 5)))


class TestGradients:
    """Analytic gradients against central finite differences."""

    @pytest.mark.parametrize("weighted", [False, True])
    def test_random_toy_networks(self, weighted):
        """Both objectives match finite differences on 20 random nets."""
        rng = np.random.default_rng(0 if weighted else 1)
        for trial in range(20):
            depth = int(rng.integers(2, 5))
            dims = [int(d) for d in rng.integers(1, 9, size=depth)]
            model = init_model(dims, seed=trial)
            for b in model.biases:
                b[:] = rng.normal(scale=0.5, size=b.shape)
            k = int(rng.integers(1, 6))
            x = rng.normal(size=(k, dims[0]))
            s = rng.normal(size=(k, dims[-1]))
            weights = rng.uniform(0.2, 2.0, size=(k, dims[-1])) if weighted else None
            l2 = float(rng.uniform(0.0, 0.1))

            _, grads = loss_and_grad(model, x, s, weights, l2)
            numeric_w, numeric_b = numeric_gradients(model, x, s, weights, l2)
            analytic = flatten(grads.weights + grads.biases)
            numeric = flatten(numeric_w + numeric_b)
            scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
            assert np.linalg.norm(analytic - numeric) / scale < 1e-4

    def test_vector_weights(self, rng):
        """A shared weight vector equals the same weights repeated per row."""
        model = init_model([4, 5, 3], seed=0)
        x, s = rng.normal(size=(6, 4)), rng.normal(size=(6, 3))
        w = np.array([0.5, 1.0, 2.0])
        loss_vec, g_vec = loss_and_grad(model, x, s, w)
        loss_mat, g_mat = loss_and_grad(model, x, s, np.tile(w, (6, 1)))
        assert loss_vec == pytest.approx(loss_mat)
        assert np.allclose(g_vec.weights[0], g_mat.weights[0])

    def test_unit_weights_reproduce_plain_loss(self):
        """Unit weights give the unweighted loss and gradients bit for bit."""
        rng = np.random.default_rng(5)
        for _ in range(10):
            model = init_model([7, 6, 4], seed=int(rng.integers(1000)))
            x, s = rng.normal(size=(9, 7)), rng.normal(size=(9, 4))
            plain, g_plain = loss_and_grad(model, x, s, None, 1e-3)
            unit, g_unit = loss_and_grad(model, x, s, np.ones((9, 4)), 1e-3)
            assert plain == unit
            for a, b in zip(g_plain.weights, g_unit.weights):
                assert np.array_equal(a, b)

    def test_biases_not_regularised(self, rng):
        """L2 changes weight gradients but not bias gradients."""
        model = init_model([3, 4, 2], seed=0)
        x, s = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
        _, without = loss_and_grad(model, x, s, None, 0.0)
        _, with_l2 = loss_and_grad(model, x, s, None, 0.5)
        assert np.array_equal(without.biases[0], with_l2.biases[0])
        assert not np.allclose(without.weights[0], with_l2.weights[0])

    def test_l2_adds_exactly_two_lambda_w(self, rng):
        """Weight decay shifts each weight gradient by 2 * l2 * W."""
        model = init_model([3, 4, 2], seed=1)
        x, s = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
        l2 = 0.25
        _, without = loss_and_grad(model, x, s, None, 0.0)
        _, with_l2 = loss_and_grad(model, x, s, None, l2)
        for w, a, b in zip(model.weights, without.weights, with_l2.weights):
            assert np.allclose(b - a, 2.0 * l2 * w, rtol=1e-12, atol=1e-15)

    def test_bad_weight_shape(self, rng):
        """Weights must have one entry per output bin."""
        model = init_model([3, 2], seed=0)
        with pytest.raises(DimMismatch):
            loss_and_grad(
                model, rng.normal(size=(4, 3)), rng.normal(size=(4, 2)), np.ones(3)
            )


class TestSgdStep:
    """Tests for the parameter update."""

    def test_quadratic_step(self):
        """On loss w^2 one step moves w by exactly -lr * 2w."""
        model = MlpModel([1, 1], [np.array([[1.5]])], [np.zeros(1)])
        loss, grads = loss_and_grad(model, np.array([[1.0]]), np.array([[0.0]]))
        assert loss == 2.25
        assert grads.weights[0][0, 0] == 3.0
        sgd_step(model, grads, lr=0.1)
        assert model.weights[0][0, 0] == 1.5 - 0.1 * 3.0
        assert model.biases[0][0] == -0.1 * 3.0


class TestTrainConfig:
    """Tests for hyperparameter validation."""

    def test_schedule(self):
        """The learning rate drops after the decay epoch."""
        cfg = TrainConfig()
        assert cfg.learning_rate(1) == 0.05
        assert cfg.learning_rate(10) == 0.05
        assert cfg.learning_rate(11) == 0.01

    def test_loss_name(self):
        """The objective name follows loss mode and weight source."""
        assert TrainConfig().loss_name == "mse"
        assert TrainConfig(loss_mode="weighted").loss_name == "ath"
        assert (
            TrainConfig(loss_mode="weighted", weight_source="masking").loss_name
            == "masking"
        )

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"batch_size": 0},
            {"l2": -1.0},
            {"epochs": 0},
            {"loss_mode": "l1"},
            {"weight_source": "loudness"},
            {"hidden_layers": (16, 0)},
        ],
    )
    def test_invalid(self, kwargs):
        """Invalid hyperparameters raise ConfigError."""
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)


class TestTrain:
    """Tests for minibatch SGD with model selection."""

    def config(self, **kwargs):
        base = dict(batch_size=32, epochs=15, lr_decay_epoch=10, hidden_layers=(16,))
        base.update(kwargs)
        return TrainConfig(**base)

    def test_loss_decreases(self, rng):
        """Training reduces the validation loss."""
        x, s = regression_problem(rng)
        model = init_model([6, 16, 3], seed=0)
        model.feature_norm = FeatureNorm.from_data(x[:300], s[:300])
        initial_val = np.mean(
            (
                forward(model, model.feature_norm.normalize_inputs(x[300:]))
                - model.feature_norm.normalize_targets(s[300:])
            )
            ** 2
        ) * 3
        best, history = train(
            model,
            TrainingData(x[:300], s[:300]),
            TrainingData(x[300:], s[300:]),
            self.config(),
        )
        assert len(history) == 15
        assert history[-1].train_loss < history[0].train_loss
        assert best.metadata["val_loss"] < initial_val

    def test_history_schedule(self, rng):
        """History rows carry the learning rate of each epoch."""
        x, s = regression_problem(rng, rows=64)
        _, history = train(
            init_model([6, 16, 3], seed=0),
            TrainingData(x, s),
            TrainingData(x, s),
            self.config(epochs=12),
        )
        assert [r.epoch for r in history] == list(range(1, 13))
        assert history[9].lr == 0.05
        assert history[10].lr == 0.01

    def test_best_snapshot_selected(self, rng):
        """The returned model is the lowest-validation-loss epoch."""
        x, s = regression_problem(rng, rows=200)
        best, history = train(
            init_model([6, 16, 3], seed=0),
            TrainingData(x[:150], s[:150]),
            TrainingData(x[150:], s[150:]),
            self.config(epochs=8),
        )
        losses = [r.val_loss for r in history]
        assert best.metadata["epoch"] == int(np.argmin(losses)) + 1
        assert best.metadata["val_loss"] == min(losses)

    def test_input_model_untouched(self, rng):
        """Training works on a copy."""
        x, s = regression_problem(rng, rows=64)
        model = init_model([6, 16, 3], seed=0)
        before = model.weights[0].copy()
        train(model, TrainingData(x, s), TrainingData(x, s), self.config(epochs=2))
        assert np.array_equal(model.weights[0], before)

    def test_deterministic(self, rng):
        """Identical inputs and seeds give identical parameters."""
        x, s = regression_problem(rng, rows=100)
        runs = [
            train(
                init_model([6, 16, 3], seed=2),
                TrainingData(x, s),
                TrainingData(x, s),
                self.config(epochs=3, seed=9),
            )[0]
            for _ in range(2)
        ]
        assert all(
            np.array_equal(a, b) for a, b in zip(runs[0].weights, runs[1].weights)
        )

    def test_weighted_training(self, rng):
        """Per-row weights are accepted and used."""
        x, s = regression_problem(rng, rows=100)
        w = rng.uniform(0.5, 2.0, size=(100, 3))
        best, _ = train(
            init_model([6, 16, 3], seed=0),
            TrainingData(x, s, w),
            TrainingData(x, s, w),
            self.config(epochs=2, loss_mode="weighted"),
        )
        assert np.isfinite(best.metadata["val_loss"])

    def test_empty(self, rng):
        """Empty sets are rejected."""
        x, s = regression_problem(rng, rows=10)
        empty = TrainingData(np.zeros((0, 6)), np.zeros((0, 3)))
        with pytest.raises(EmptyDataset):
            train(init_model([6, 3], seed=0), empty, TrainingData(x, s), TrainConfig())

    def test_divergence(self, rng):
        """A huge learning rate raises DivergedLoss."""
        x, s = regression_problem(rng, rows=50)
        with pytest.raises(DivergedLoss):
            train(
                init_model([6, 3], seed=0),
                TrainingData(x, 1e3 * s),
                TrainingData(x, 1e3 * s),
                self.config(batch_size=1, epochs=5, lr_initial=1e8, lr_final=1e8),
            )


class TestModelFile:
    """Tests for save_model / load_model."""

    def trained_like(self):
        model = init_model([4, 6, 3], seed=0)
        model.biases[0][:] = np.linspace(-1, 1, 6)
        model.feature_norm = FeatureNorm(
            np.arange(4.0), np.full(4, 2.0), np.ones(3), np.full(3, 0.5)
        )
        model.metadata = {"input_mode": "bsd", "epoch": 3}
        return model

    def test_round_trip_exact(self, tmp_path):
        """Parameters, normalisation and metadata survive bit for bit."""
        model = self.trained_like()
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.layer_dims == model.layer_dims
        for a, b in zip(model.weights + model.biases, loaded.weights + loaded.biases):
            assert np.array_equal(a, b)
        assert np.array_equal(
            loaded.feature_norm.input_mean, model.feature_norm.input_mean
        )
        assert loaded.metadata == model.metadata

    def test_without_norm(self, tmp_path):
        """Models without normalisation load with identity statistics."""
        path = tmp_path / "m.json"
        save_model(init_model([3, 2], seed=0), path)
        loaded = load_model(path)
        assert loaded.feature_norm is None
        assert np.all(loaded.norm().input_std == 1.0)

    def test_version_mismatch(self, tmp_path):
        """Other format versions are rejected."""
        path = tmp_path / "m.json"
        save_model(self.trained_like(), path)
        document = json.loads(path.read_text())
        document["format_version"] = 2
        path.write_text(json.dumps(document))
        with pytest.raises(VersionMismatch):
            load_model(path)

    def test_corrupt_parameter(self, tmp_path):
        """A changed weight fails the checksum."""
        path = tmp_path / "m.json"
        save_model(self.trained_like(), path)
        document = json.loads(path.read_text())
        document["layers"][0]["w"][0] += 1e-9
        path.write_text(json.dumps(document))
        with pytest.raises(ChecksumMismatch):
            load_model(path)

    def test_truncated(self, tmp_path):
        """A truncated file raises ChecksumMismatch."""
        path = tmp_path / "m.json"
        save_model(self.trained_like(), path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ChecksumMismatch):
            load_model(path)

    def test_missing_layer(self, tmp_path):
        """A document with a layer removed is rejected."""
        path = tmp_path / "m.json"
        save_model(self.trained_like(), path)
        document = json.loads(path.read_text())
        document["layers"].pop()
        path.write_text(json.dumps(document))
        with pytest.raises((ChecksumMismatch, BadDims)):
            load_model(path)
