"""
Pydantic models for the complex-valued CNN cascade and its training.
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, validator

from scatternet.exceptions import NetworkShapeError

LAYERS_PER_MODULE = 3


class ModuleSpec(BaseModel):
    """Shape of one CNN module: conv-CReLU, pool, conv-CReLU, upsample, conv-CReLU."""
    kernel1: int = Field(9, ge=1, description="Support f1 of the first convolution")
    channels1: int = Field(32, ge=1, description="Filters n1 of the first convolution")
    kernel2: int = Field(5, ge=1, description="Support f2 of the second convolution")
    channels2: int = Field(16, ge=1, description="Filters n2 of the second convolution")
    kernel3: int = Field(5, ge=1, description="Support f3 of the output convolution")
    residual: bool = Field(False, description="Add the module input before the final CReLU")

    class Config:
        frozen = True

    @validator("kernel1", "kernel2", "kernel3")
    def validate_odd(cls, v):
        """Same padding is symmetric only for odd supports."""
        if v % 2 == 0:
            raise ValueError(f"Kernel support must be odd, got {v}")
        return v

    def layer_shapes(self):
        """(C_out, C_in, f) for the three convolutions."""
        return [
            (self.channels1, 1, self.kernel1),
            (self.channels2, self.channels1, self.kernel2),
            (1, self.channels2, self.kernel3),
        ]


class ConvLayer(BaseModel):
    """Complex convolution weights (C_out, C_in, f, f) and biases (C_out,)."""
    weights: np.ndarray
    biases: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @validator("weights")
    def validate_weights(cls, v):
        w = np.array(v, dtype=np.complex128)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ValueError(f"Weights must have shape (C_out, C_in, f, f), got {w.shape}")
        if w.shape[2] % 2 == 0:
            raise ValueError(f"Kernel support must be odd, got {w.shape[2]}")
        return w

    @validator("biases")
    def validate_biases(cls, v, values):
        b = np.array(v, dtype=np.complex128).ravel()
        weights = values.get("weights")
        if weights is not None and b.size != weights.shape[0]:
            raise ValueError(f"Expected {weights.shape[0]} biases, got {b.size}")
        return b

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel(self) -> int:
        return self.weights.shape[2]

    @classmethod
    def zeros(cls, out_channels: int, in_channels: int, kernel: int) -> "ConvLayer":
        return cls(
            weights=np.zeros((out_channels, in_channels, kernel, kernel), dtype=np.complex128),
            biases=np.zeros(out_channels, dtype=np.complex128),
        )

    def copy(self) -> "ConvLayer":
        return ConvLayer(weights=self.weights.copy(), biases=self.biases.copy())


class CascadeModule(BaseModel):
    """One CNN module of the cascade."""
    layers: List[ConvLayer]
    residual: bool = False

    @validator("layers")
    def validate_layers(cls, v):
        if len(v) != LAYERS_PER_MODULE:
            raise ValueError(f"A module has {LAYERS_PER_MODULE} convolutions, got {len(v)}")
        if v[0].in_channels != 1 or v[2].out_channels != 1:
            raise ValueError("Modules map one channel to one channel")
        if v[1].in_channels != v[0].out_channels or v[2].in_channels != v[1].out_channels:
            raise ValueError("Consecutive convolutions disagree on channel counts")
        return v

    def copy(self) -> "CascadeModule":
        return CascadeModule(layers=[layer.copy() for layer in self.layers], residual=self.residual)


class CascadeModel(BaseModel):
    """Cascade of CNN modules applied in series to the back-propagation image."""
    modules: List[CascadeModule] = Field(..., min_length=1)

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    @property
    def spec(self) -> ModuleSpec:
        first = self.modules[0]
        (c1, _, f1), (c2, _, f2), (_, _, f3) = [
            (layer.out_channels, layer.in_channels, layer.kernel) for layer in first.layers
        ]
        return ModuleSpec(kernel1=f1, channels1=c1, kernel2=f2, channels2=c2, kernel3=f3, residual=first.residual)

    def copy(self) -> "CascadeModel":
        return CascadeModel(modules=[module.copy() for module in self.modules])

    def truncated(self, n_modules: int) -> "CascadeModel":
        """The first n_modules modules, sharing weights."""
        if not 1 <= n_modules <= self.n_modules:
            raise NetworkShapeError(f"Cannot keep {n_modules} of {self.n_modules} modules")
        return CascadeModel(modules=self.modules[:n_modules])

    def parameters_equal(self, other: "CascadeModel") -> bool:
        if self.n_modules != other.n_modules:
            return False
        for mine, theirs in zip(self.modules, other.modules):
            for a, b in zip(mine.layers, theirs.layers):
                if a.weights.shape != b.weights.shape:
                    return False
                if not (np.array_equal(a.weights, b.weights) and np.array_equal(a.biases, b.biases)):
                    return False
        return True


class LayerGradient(BaseModel):
    """Gradient dL/dRe + i dL/dIm for one convolution."""
    weights: np.ndarray
    biases: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class TrainConfig(BaseModel):
    """Two-stage training settings."""
    epochs: int = Field(101, ge=0, description="Total epochs: per-module pretraining plus end-to-end fine-tuning")
    pretrain_epochs: int = Field(30, ge=0, description="Epochs each module is pretrained alone")
    batch_size: int = Field(32, ge=1)
    seed: int = Field(0, ge=0)
    lr_early: float = Field(1e-4, gt=0, description="Learning rate of the first two convolutions of every module")
    lr_last: float = Field(1e-5, gt=0, description="Learning rate of the output convolution of every module")
    patience: int = Field(10, ge=1, description="Epochs without validation improvement before halving")
    init_std: float = Field(1e-3, gt=0, description="Per-component std of the initial weights")
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    progress: bool = Field(False, description="Show a progress bar per stage")

    class Config:
        frozen = True

    @property
    def stage_epochs(self):
        """(pretrain epochs per module, fine-tune epochs)."""
        pretrain = min(self.pretrain_epochs, self.epochs)
        return pretrain, self.epochs - pretrain


class EpochRecord(BaseModel):
    """One row of the training history."""
    epoch: int
    stage: str = Field(..., description="pretrain or finetune")
    module: Optional[int] = Field(None, description="Module trained in the pretrain stage")
    train_loss: float
    val_loss: float
    learning_rates: List[float]


class TrainingHistory(BaseModel):
    records: List[EpochRecord] = Field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def train_losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    @property
    def val_losses(self) -> List[float]:
        return [r.val_loss for r in self.records]
