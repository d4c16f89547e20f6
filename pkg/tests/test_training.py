"""
Unit tests for ADAM, the learning-rate schedule and two-stage training.
"""
import numpy as np
import pytest

from scatternet.exceptions import DatasetError, NetworkShapeError
from scatternet.models.network import LayerGradient, ModuleSpec, TrainConfig
from scatternet.services.network_service import cascade_forward, euclidean_loss, init_model
from scatternet.services.training_service import (
    AdamState,
    LearningRateSchedule,
    adam_step,
    predict,
    train_arrays,
)

SPEC = ModuleSpec(kernel1=3, channels1=4, kernel2=3, channels2=2, kernel3=3)


@pytest.fixture
def arrays():
    """Blurry positive inputs and their blocky targets on 8x8 images."""
    rng = np.random.default_rng(0)
    targets = np.zeros((12, 1, 8, 8), dtype=complex)
    for i in range(12):
        r, c = rng.integers(0, 5, size=2)
        targets[i, 0, r:r + 3, c:c + 3] = 1.0 + 0.2j
    inputs = 0.5 * targets + 0.05 * np.abs(rng.standard_normal(targets.shape))
    return inputs[:9], targets[:9], inputs[9:], targets[9:]


def _config(**overrides):
    values = dict(epochs=4, pretrain_epochs=1, batch_size=4, seed=3, lr_early=1e-2, lr_last=1e-2, init_std=0.1)
    values.update(overrides)
    return TrainConfig(**values)


class TestLearningRateSchedule:
    """Test cases for LearningRateSchedule."""

    def test_per_layer_rates(self):
        assert LearningRateSchedule(1e-4, 1e-5).rates() == [1e-4, 1e-4, 1e-5]

    def test_halves_after_patience(self):
        schedule = LearningRateSchedule(1e-4, 1e-5, patience=2)

        assert schedule.observe(1.0) is False
        assert schedule.observe(1.0) is False
        assert schedule.observe(1.0) is True
        assert schedule.rates() == pytest.approx([5e-5, 5e-5, 5e-6])

    def test_improvement_resets_patience(self):
        schedule = LearningRateSchedule(1e-4, 1e-5, patience=2)
        schedule.observe(1.0)
        schedule.observe(1.0)
        schedule.observe(0.5)

        assert schedule.observe(0.5) is False
        assert schedule.scale == 1.0


class TestAdam:
    """Test cases for adam_step."""

    def test_first_step_moves_by_learning_rate(self):
        model = init_model(SPEC, n_modules=1, init_std=0.1, seed=0)
        before = model.copy()
        grads = [[
            LayerGradient(weights=np.full(layer.weights.shape, 2.0 - 3.0j), biases=np.full(layer.biases.shape, -1.0 + 0.5j))
            for layer in model.modules[0].layers
        ]]
        schedule = LearningRateSchedule(1e-2, 1e-3)

        adam_step(AdamState(model), grads, schedule)

        delta = model.modules[0].layers[0].weights - before.modules[0].layers[0].weights
        np.testing.assert_allclose(delta, np.full(delta.shape, -1e-2 + 1e-2j), rtol=1e-6)
        delta_last = model.modules[0].layers[2].biases - before.modules[0].layers[2].biases
        np.testing.assert_allclose(delta_last, np.full(delta_last.shape, 1e-3 - 1e-3j), rtol=1e-6)

    def test_rejects_mismatched_gradients(self):
        model = init_model(SPEC, n_modules=2, seed=0)

        with pytest.raises(NetworkShapeError):
            adam_step(AdamState(model), [], LearningRateSchedule(1e-3, 1e-3))

    def test_zero_gradient_leaves_weights(self):
        model = init_model(SPEC, n_modules=2, init_std=0.1, seed=0)
        before = model.copy()
        grads = [
            [
                LayerGradient(weights=np.zeros_like(layer.weights), biases=np.zeros_like(layer.biases))
                for layer in module.layers
            ]
            for module in model.modules
        ]
        state = AdamState(model)

        for _ in range(3):
            adam_step(state, grads, LearningRateSchedule(1e-2, 1e-2))

        assert model.parameters_equal(before)


class TestTraining:
    """Test cases for train_arrays and predict."""

    def test_zero_epochs_returns_initial_model(self, arrays):
        model = init_model(SPEC, n_modules=2, init_std=0.1, seed=1)
        trained, history = train_arrays(model, *arrays, cfg=_config(epochs=0))

        assert len(history) == 0
        assert trained.parameters_equal(model)

    def test_history_covers_both_stages(self, arrays):
        model = init_model(SPEC, n_modules=2, init_std=0.1, seed=1)
        _, history = train_arrays(model, *arrays, cfg=_config(epochs=5, pretrain_epochs=2))

        assert len(history) == 2 * 2 + 3
        assert [r.stage for r in history.records] == ["pretrain"] * 4 + ["finetune"] * 3
        assert [r.module for r in history.records[:4]] == [0, 0, 1, 1]
        assert [r.epoch for r in history.records] == list(range(1, 8))
        assert history.records[0].learning_rates == [1e-2, 1e-2, 1e-2]

    def test_loss_decreases(self, arrays):
        model = init_model(SPEC, n_modules=1, init_std=0.1, seed=2)
        _, history = train_arrays(model, *arrays, cfg=_config(epochs=20, pretrain_epochs=0))

        assert history.train_losses[-1] < history.train_losses[0]
        assert history.val_losses[-1] < history.val_losses[0]

    def test_input_model_untouched(self, arrays):
        model = init_model(SPEC, n_modules=1, init_std=0.1, seed=2)
        snapshot = model.copy()
        trained, _ = train_arrays(model, *arrays, cfg=_config(epochs=2, pretrain_epochs=0))

        assert model.parameters_equal(snapshot)
        assert not trained.parameters_equal(snapshot)

    def test_seeded_runs_match(self, arrays):
        model = init_model(SPEC, n_modules=2, init_std=0.1, seed=4)
        first, first_history = train_arrays(model, *arrays, cfg=_config())
        second, second_history = train_arrays(model, *arrays, cfg=_config())

        assert first.parameters_equal(second)
        assert first_history.train_losses == second_history.train_losses

    def test_empty_validation_split(self, arrays):
        x_train, y_train, x_val, _ = arrays
        empty = np.zeros((0, 1, 8, 8), dtype=complex)

        with pytest.raises(DatasetError):
            train_arrays(init_model(SPEC, n_modules=1, seed=0), x_train, y_train, empty, empty)

    def test_mismatched_targets(self, arrays):
        x_train, y_train, x_val, y_val = arrays

        with pytest.raises(NetworkShapeError):
            train_arrays(init_model(SPEC, n_modules=1, seed=0), x_train, y_train[:-1], x_val, y_val)

    def test_predict_in_chunks(self, arrays):
        model = init_model(SPEC, n_modules=2, init_std=0.1, seed=5)
        inputs = arrays[0]

        np.testing.assert_allclose(predict(model, inputs, batch_size=2), cascade_forward(model, inputs), atol=1e-14)
        np.testing.assert_allclose(
            predict(model, inputs, n_modules=1, batch_size=4), cascade_forward(model, inputs, n_modules=1), atol=1e-14
        )

class TestSingleSampleFit:
    """One image, full-batch ADAM: the cascade must be able to memorize it."""

    @pytest.fixture
    def pair(self, arrays):
        x_train, y_train, _, _ = arrays
        return x_train[:1], y_train[:1]

    def test_overfits_one_sample(self, pair):
        x, y = pair
        model = init_model(SPEC, n_modules=1, init_std=0.1, seed=6)
        initial = euclidean_loss(predict(model, x), y)
        cfg = _config(epochs=1000, pretrain_epochs=0, batch_size=1, lr_early=1e-2, lr_last=1e-2)

        trained, _ = train_arrays(model, x, y, x, y, cfg=cfg)

        assert euclidean_loss(predict(trained, x), y) < 1e-3 * initial

    def test_early_steps_monotone(self, pair):
        x, y = pair
        model = init_model(SPEC, n_modules=1, init_std=0.1, seed=6)
        cfg = _config(epochs=21, pretrain_epochs=0, batch_size=1, lr_early=1e-4, lr_last=1e-5, patience=100)

        _, history = train_arrays(model, x, y, x, y, cfg=cfg)

        # train loss of epoch e is measured before its single step
        losses = history.train_losses
        assert all(later < earlier for earlier, later in zip(losses, losses[1:]))
