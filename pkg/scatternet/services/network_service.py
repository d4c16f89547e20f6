"""
Complex-valued CNN layers with hand-written reverse-mode gradients.

Tensors are complex128 arrays shaped (B, C, H, W); (C, H, W) inputs are
accepted and treated as a batch of one. Gradients follow the convention
G = dL/dRe(z) + i dL/dIm(z) for the real-valued loss L.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scatternet.exceptions import MissingMemoError, NetworkShapeError
from scatternet.models.network import (
    CascadeModel,
    CascadeModule,
    ConvLayer,
    LayerGradient,
    ModuleSpec,
)

logger = logging.getLogger(__name__)


def _as_batch(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise NetworkShapeError(f"Expected (C, H, W) or (B, C, H, W), got shape {x.shape}")


def _restore(x: np.ndarray, squeezed: bool) -> np.ndarray:
    return x[0] if squeezed else x


def _windows(x: np.ndarray, kernel: int) -> np.ndarray:
    """Zero-padded (B, C, H, W, f, f) sliding windows for same-size correlation."""
    pad = kernel // 2
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    return sliding_window_view(padded, (kernel, kernel), axis=(2, 3))


def _correlate(windows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_c,u,v weights[o,c,u,v] * windows[b,c,h,w,u,v] -> (B, O, H, W)."""
    out = np.tensordot(windows, weights, axes=([1, 4, 5], [1, 2, 3]))
    return np.moveaxis(out, 3, 1)


def _check_conv(x: np.ndarray, layer: ConvLayer) -> None:
    if x.shape[1] != layer.in_channels:
        raise NetworkShapeError(f"Input has {x.shape[1]} channels, layer expects {layer.in_channels}")
    if x.shape[2] < layer.kernel or x.shape[3] < layer.kernel:
        raise NetworkShapeError(f"Input {x.shape[2]}x{x.shape[3]} smaller than kernel {layer.kernel}")


def cconv2d(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """
    Complex same-size convolution (cross-correlation, zero padding) plus bias.

    Composed of four real correlations:
    re = re_x * re_W - im_x * im_W, im = re_x * im_W + im_x * re_W.
    """
    batch, squeezed = _as_batch(x)
    _check_conv(batch, layer)
    re_windows = _windows(batch.real, layer.kernel)
    im_windows = _windows(batch.imag, layer.kernel)
    w_re, w_im = layer.weights.real, layer.weights.imag

    real = _correlate(re_windows, w_re) - _correlate(im_windows, w_im)
    imag = _correlate(re_windows, w_im) + _correlate(im_windows, w_re)
    out = real + 1j * imag + layer.biases[None, :, None, None]
    return _restore(out, squeezed)


def cconv2d_backward(x: np.ndarray, layer: ConvLayer, grad_out: np.ndarray) -> Tuple[LayerGradient, np.ndarray]:
    """
    Gradients of a convolution given its input and upstream gradient.

    Returns:
        Tuple of (parameter gradients, input gradient)
    """
    batch, squeezed = _as_batch(x)
    grad, _ = _as_batch(grad_out)
    kernel = layer.kernel

    grad_weights = np.tensordot(grad, np.conj(_windows(batch, kernel)), axes=([0, 2, 3], [0, 2, 3]))
    grad_biases = grad.sum(axis=(0, 2, 3))

    flipped = np.conj(layer.weights[:, :, ::-1, ::-1]).transpose(1, 0, 2, 3)
    grad_input = _correlate(_windows(grad, kernel), flipped)
    return LayerGradient(weights=grad_weights, biases=grad_biases), _restore(grad_input, squeezed)


def crelu(x: np.ndarray) -> np.ndarray:
    """max(0, re) + i max(0, im)."""
    x = np.asarray(x, dtype=np.complex128)
    return np.maximum(x.real, 0.0) + 1j * np.maximum(x.imag, 0.0)


def crelu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return np.where(x.real > 0, grad_out.real, 0.0) + 1j * np.where(x.imag > 0, grad_out.imag, 0.0)


def maxpool2(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    2x2 pooling by largest magnitude, first in row-major order on ties.

    Returns:
        Tuple of (pooled tensor, winner index 0..3 per output entry)
    """
    batch, squeezed = _as_batch(x)
    b, c, h, w = batch.shape
    if h % 2 or w % 2:
        raise NetworkShapeError(f"Pooling needs even height and width, got {h}x{w}")
    blocks = batch.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
    winners = np.argmax(np.abs(blocks), axis=-1)
    pooled = np.take_along_axis(blocks, winners[..., None], axis=-1)[..., 0]
    return _restore(pooled, squeezed), _restore(winners, squeezed)


def maxpool2_backward(winners: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    grad, squeezed = _as_batch(grad_out)
    index = winners[None] if squeezed else winners
    b, c, h2, w2 = grad.shape
    blocks = np.zeros((b, c, h2, w2, 4), dtype=np.complex128)
    np.put_along_axis(blocks, index[..., None], grad[..., None], axis=-1)
    out = blocks.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, 2 * h2, 2 * w2)
    return _restore(out, squeezed)


def upsample2(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbour 2x replication in both spatial dimensions."""
    x = np.asarray(x, dtype=np.complex128)
    return np.repeat(np.repeat(x, 2, axis=-2), 2, axis=-1)


def upsample2_backward(grad_out: np.ndarray) -> np.ndarray:
    grad, squeezed = _as_batch(grad_out)
    b, c, h, w = grad.shape
    return _restore(grad.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5)), squeezed)


class ModuleMemo:
    """Intermediate tensors of one module's forward pass."""

    def __init__(self):
        self.input = None
        self.conv1 = None
        self.act1 = None
        self.winners = None
        self.pooled = None
        self.conv2 = None
        self.act2 = None
        self.upsampled = None
        self.conv3 = None


class CascadeTape:
    """Memo of a cascade forward pass, consumed by cascade_backward."""

    def __init__(self):
        self.memos: List[ModuleMemo] = []

    def __len__(self) -> int:
        return len(self.memos)


def module_forward(module: CascadeModule, x: np.ndarray, memo: Optional[ModuleMemo] = None) -> np.ndarray:
    """conv-CReLU, pool, conv-CReLU, upsample, conv (+ input), CReLU."""
    batch, squeezed = _as_batch(x)
    if batch.shape[1] != 1:
        raise NetworkShapeError(f"Modules take one channel, got {batch.shape[1]}")
    conv1, conv2, conv3 = module.layers

    z1 = cconv2d(batch, conv1)
    a1 = crelu(z1)
    pooled, winners = maxpool2(a1)
    z2 = cconv2d(pooled, conv2)
    a2 = crelu(z2)
    up = upsample2(a2)
    z3 = cconv2d(up, conv3)
    if module.residual:
        z3 = z3 + batch
    out = crelu(z3)

    if memo is not None:
        memo.input, memo.conv1, memo.act1 = batch, z1, a1
        memo.winners, memo.pooled = winners, pooled
        memo.conv2, memo.act2, memo.upsampled, memo.conv3 = z2, a2, up, z3
    return _restore(out, squeezed)


def module_backward(
    module: CascadeModule,
    memo: ModuleMemo,
    grad_out: np.ndarray,
) -> Tuple[List[LayerGradient], np.ndarray]:
    """Parameter gradients of the three convolutions and the input gradient."""
    if memo is None or memo.conv3 is None:
        raise MissingMemoError("Module backward called without a forward memo")
    grad, _ = _as_batch(grad_out)
    if grad.shape != memo.conv3.shape:
        raise NetworkShapeError(f"Upstream gradient {grad.shape} does not match output {memo.conv3.shape}")
    conv1, conv2, conv3 = module.layers

    g3 = crelu_backward(memo.conv3, grad)
    grad3, g_up = cconv2d_backward(memo.upsampled, conv3, g3)
    g_a2 = upsample2_backward(g_up)
    g2 = crelu_backward(memo.conv2, g_a2)
    grad2, g_pooled = cconv2d_backward(memo.pooled, conv2, g2)
    g_a1 = maxpool2_backward(memo.winners, g_pooled)
    g1 = crelu_backward(memo.conv1, g_a1)
    grad1, g_input = cconv2d_backward(memo.input, conv1, g1)
    if module.residual:
        g_input = g_input + g3
    return [grad1, grad2, grad3], g_input


def cascade_forward(
    model: CascadeModel,
    x: np.ndarray,
    n_modules: Optional[int] = None,
    tape: Optional[CascadeTape] = None,
) -> np.ndarray:
    """
    Apply the first n_modules modules (all by default) in series.

    Args:
        model: Cascade weights
        x: (1, H, W) or (B, 1, H, W) back-propagation images
        n_modules: Truncate the cascade
        tape: Filled with per-module memos when given

    Returns:
        np.ndarray: Output of the same shape as x, re and im non-negative
    """
    count = model.n_modules if n_modules is None else n_modules
    if not 1 <= count <= model.n_modules:
        raise NetworkShapeError(f"Cannot apply {count} of {model.n_modules} modules")
    batch, squeezed = _as_batch(x)
    if batch.shape[2] % 2 or batch.shape[3] % 2:
        raise NetworkShapeError(f"Image size must be even, got {batch.shape[2]}x{batch.shape[3]}")

    if tape is not None:
        tape.memos = []
    out = batch
    for module in model.modules[:count]:
        memo = ModuleMemo() if tape is not None else None
        out = module_forward(module, out, memo)
        if tape is not None:
            tape.memos.append(memo)
    return _restore(out, squeezed)


def cascade_backward(
    model: CascadeModel,
    tape: Optional[CascadeTape],
    upstream_grad: np.ndarray,
) -> Tuple[List[List[LayerGradient]], np.ndarray]:
    """
    Reverse pass through the modules recorded on the tape.

    Returns:
        Tuple of (per-module lists of layer gradients, input gradient)
    """
    if tape is None or len(tape) == 0:
        raise MissingMemoError("cascade_backward needs the tape of a cascade_forward call")
    grad, squeezed = _as_batch(upstream_grad)
    gradients: List[List[LayerGradient]] = [None] * len(tape)
    for index in range(len(tape) - 1, -1, -1):
        gradients[index], grad = module_backward(model.modules[index], tape.memos[index], grad)
    return gradients, _restore(grad, squeezed)


def euclidean_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """(1/(2HW)) sum |pred - target|^2 per image, averaged over the batch."""
    pred_b, _ = _as_batch(pred)
    target_b, _ = _as_batch(target)
    if pred_b.shape != target_b.shape:
        raise NetworkShapeError(f"Prediction {pred_b.shape} and target {target_b.shape} differ")
    b, _, h, w = pred_b.shape
    return float(np.sum(np.abs(pred_b - target_b) ** 2) / (2.0 * h * w * b))


def euclidean_loss_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """dL/dRe + i dL/dIm of euclidean_loss with respect to pred."""
    pred_b, squeezed = _as_batch(pred)
    target_b, _ = _as_batch(target)
    if pred_b.shape != target_b.shape:
        raise NetworkShapeError(f"Prediction {pred_b.shape} and target {target_b.shape} differ")
    b, _, h, w = pred_b.shape
    return _restore((pred_b - target_b) / (h * w * b), squeezed)


def init_model(
    spec: Optional[ModuleSpec] = None,
    n_modules: int = 3,
    init_std: float = 1e-3,
    seed: int = 0,
) -> CascadeModel:
    """
    Cascade with complex Gaussian weights (zero mean, init_std per component)
    and zero biases.
    """
    spec = spec or ModuleSpec()
    if n_modules < 1:
        raise NetworkShapeError(f"A cascade needs at least one module, got {n_modules}")
    rng = np.random.default_rng(seed)
    modules = []
    for _ in range(n_modules):
        layers = []
        for out_channels, in_channels, kernel in spec.layer_shapes():
            shape = (out_channels, in_channels, kernel, kernel)
            weights = rng.normal(0.0, init_std, shape) + 1j * rng.normal(0.0, init_std, shape)
            layers.append(ConvLayer(weights=weights, biases=np.zeros(out_channels, dtype=np.complex128)))
        modules.append(CascadeModule(layers=layers, residual=spec.residual))
    logger.info(f"Initialized cascade: {n_modules} modules, spec={spec.layer_shapes()}, residual={spec.residual}")
    return CascadeModel(modules=modules)
