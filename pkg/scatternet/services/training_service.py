"""
ADAM training of the CNN cascade: per-module pretraining followed by
end-to-end fine-tuning.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from scatternet.exceptions import DatasetError, NetworkShapeError
from scatternet.models.dataset import ScatteringDataset
from scatternet.models.network import (
    LAYERS_PER_MODULE,
    CascadeModel,
    EpochRecord,
    LayerGradient,
    TrainConfig,
    TrainingHistory,
)
from scatternet.services.network_service import (
    CascadeTape,
    cascade_backward,
    cascade_forward,
    euclidean_loss,
    euclidean_loss_grad,
)

logger = logging.getLogger(__name__)


class LearningRateSchedule:
    """Per-layer base rates scaled by a factor that halves on validation plateaus."""

    def __init__(self, lr_early: float, lr_last: float, patience: int = 10):
        self.base_rates = [lr_early] * (LAYERS_PER_MODULE - 1) + [lr_last]
        self.patience = patience
        self.scale = 1.0
        self.best = math.inf
        self.stale_epochs = 0

    def rates(self) -> List[float]:
        return [rate * self.scale for rate in self.base_rates]

    def observe(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; returns True when the scale was halved."""
        if val_loss < self.best:
            self.best = val_loss
            self.stale_epochs = 0
            return False
        self.stale_epochs += 1
        if self.stale_epochs >= self.patience:
            self.scale *= 0.5
            self.stale_epochs = 0
            logger.warning(f"Validation loss plateaued for {self.patience} epochs; learning-rate scale now {self.scale:g}")
            return True
        return False


class AdamState:
    """
    ADAM moments for every convolution of a cascade.

    Real and imaginary parts are independent parameters; moments are kept
    as complex arrays whose re/im hold the moments of the re/im parts.
    """

    def __init__(self, model: CascadeModel, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.first = [[(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in m.layers] for m in model.modules]
        self.second = [[(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in m.layers] for m in model.modules]

    def _update(self, param: np.ndarray, grad: np.ndarray, first: np.ndarray, second: np.ndarray, lr: float) -> None:
        first *= self.beta1
        first += (1.0 - self.beta1) * grad
        second *= self.beta2
        second += (1.0 - self.beta2) * (grad.real ** 2 + 1j * grad.imag ** 2)

        first_hat = first / (1.0 - self.beta1 ** self.step_count)
        second_hat = second / (1.0 - self.beta2 ** self.step_count)
        param -= lr * (
            first_hat.real / (np.sqrt(second_hat.real) + self.eps)
            + 1j * first_hat.imag / (np.sqrt(second_hat.imag) + self.eps)
        )


def adam_step(state: AdamState, grads: List[List[LayerGradient]], schedule: LearningRateSchedule) -> CascadeModel:
    """
    One ADAM update of every parameter of state.model, in place.

    Args:
        state: Moments and step counter
        grads: Per-module lists of layer gradients
        schedule: Supplies the per-layer learning rates

    Returns:
        CascadeModel: The updated model
    """
    if len(grads) != state.model.n_modules:
        raise NetworkShapeError(f"Got gradients for {len(grads)} modules, model has {state.model.n_modules}")
    state.step_count += 1
    rates = schedule.rates()
    for m, (module, module_grads) in enumerate(zip(state.model.modules, grads)):
        for k, (layer, grad) in enumerate(zip(module.layers, module_grads)):
            if grad.weights.shape != layer.weights.shape or grad.biases.shape != layer.biases.shape:
                raise NetworkShapeError(f"Gradient shape mismatch in module {m}, layer {k}")
            first_w, first_b = state.first[m][k]
            second_w, second_b = state.second[m][k]
            state._update(layer.weights, grad.weights, first_w, second_w, rates[k])
            state._update(layer.biases, grad.biases, first_b, second_b, rates[k])
    return state.model


def predict(model: CascadeModel, x: np.ndarray, n_modules: Optional[int] = None, batch_size: int = 32) -> np.ndarray:
    """Cascade output for a (S, 1, H, W) stack, evaluated in chunks."""
    if x.shape[0] == 0:
        return np.zeros_like(x, dtype=np.complex128)
    chunks = [
        cascade_forward(model, x[start:start + batch_size], n_modules=n_modules)
        for start in range(0, x.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0)


def _check_pairs(inputs: np.ndarray, targets: np.ndarray, label: str) -> None:
    if inputs.shape[0] == 0:
        raise DatasetError(f"The {label} split is empty")
    if inputs.shape != targets.shape or inputs.ndim != 4 or inputs.shape[1] != 1:
        raise NetworkShapeError(f"{label} inputs {inputs.shape} and targets {targets.shape} must both be (S, 1, H, W)")


class _StageRunner:
    """Mini-batch ADAM epochs for one training stage."""

    def __init__(self, cfg: TrainConfig, rng: np.random.Generator, history: TrainingHistory):
        self.cfg = cfg
        self.rng = rng
        self.history = history

    def run(
        self,
        model: CascadeModel,
        train_pair: Tuple[np.ndarray, np.ndarray],
        val_pair: Tuple[np.ndarray, np.ndarray],
        epochs: int,
        stage: str,
        module: Optional[int],
    ) -> None:
        cfg = self.cfg
        x_train, y_train = train_pair
        x_val, y_val = val_pair
        schedule = LearningRateSchedule(cfg.lr_early, cfg.lr_last, cfg.patience)
        adam = AdamState(model, cfg.beta1, cfg.beta2, cfg.adam_eps)
        label = stage if module is None else f"{stage}[{module}]"

        for _ in tqdm(range(epochs), desc=label, disable=not cfg.progress):
            rates = schedule.rates()
            order = self.rng.permutation(x_train.shape[0])
            total = 0.0
            for start in range(0, order.size, cfg.batch_size):
                batch = order[start:start + cfg.batch_size]
                tape = CascadeTape()
                pred = cascade_forward(model, x_train[batch], tape=tape)
                total += euclidean_loss(pred, y_train[batch]) * batch.size
                grads, _ = cascade_backward(model, tape, euclidean_loss_grad(pred, y_train[batch]))
                adam_step(adam, grads, schedule)

            train_loss = total / order.size
            val_loss = euclidean_loss(predict(model, x_val, batch_size=cfg.batch_size), y_val)
            epoch = len(self.history) + 1
            self.history.append(EpochRecord(
                epoch=epoch,
                stage=stage,
                module=module,
                train_loss=train_loss,
                val_loss=val_loss,
                learning_rates=rates,
            ))
            logger.info(f"epoch={epoch} stage={label} train_loss={train_loss:.6e} val_loss={val_loss:.6e}")
            schedule.observe(val_loss)


def train_arrays(
    model: CascadeModel,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: Optional[TrainConfig] = None,
) -> Tuple[CascadeModel, TrainingHistory]:
    """
    Two-stage training on (S, 1, H, W) input/target stacks.

    Stage 1 trains module k alone, its input being the output of the
    already-trained modules 0..k-1 and its target the ground truth. Stage 2
    fine-tunes the whole cascade. The input model is left untouched.

    Returns:
        Tuple of (trained model, per-epoch history)
    """
    cfg = cfg or TrainConfig()
    x_train, y_train = np.asarray(x_train, dtype=np.complex128), np.asarray(y_train, dtype=np.complex128)
    x_val, y_val = np.asarray(x_val, dtype=np.complex128), np.asarray(y_val, dtype=np.complex128)
    _check_pairs(x_train, y_train, "training")
    _check_pairs(x_val, y_val, "validation")

    model = model.copy()
    history = TrainingHistory()
    runner = _StageRunner(cfg, np.random.default_rng(cfg.seed), history)
    pretrain, finetune = cfg.stage_epochs

    if pretrain > 0:
        for k in range(model.n_modules):
            stage_train = x_train if k == 0 else predict(model, x_train, n_modules=k, batch_size=cfg.batch_size)
            stage_val = x_val if k == 0 else predict(model, x_val, n_modules=k, batch_size=cfg.batch_size)
            single = CascadeModel(modules=[model.modules[k]])
            runner.run(single, (stage_train, y_train), (stage_val, y_val), pretrain, "pretrain", k)

    if finetune > 0:
        runner.run(model, (x_train, y_train), (x_val, y_val), finetune, "finetune", None)

    logger.info(f"Training finished: {len(history)} epochs recorded")
    return model, history


def train(
    model: CascadeModel,
    train_set: ScatteringDataset,
    val_set: ScatteringDataset,
    cfg: Optional[TrainConfig] = None,
) -> Tuple[CascadeModel, TrainingHistory]:
    """Train on back-propagation images against ground-truth contrasts."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise DatasetError("Training needs non-empty training and validation splits")
    return train_arrays(model, train_set.inputs(), train_set.targets(), val_set.inputs(), val_set.targets(), cfg)
