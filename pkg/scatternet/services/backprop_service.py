"""
Back-propagation imaging: the linear contrast-source reconstruction that
feeds the network cascade and initializes contrast source inversion.
"""
import logging

import numpy as np

from scatternet.exceptions import ValidationError
from scatternet.models.fields import Operators
from scatternet.models.geometry import ContrastMap

logger = logging.getLogger(__name__)


def _check_measurements(ops: Operators, measurements: np.ndarray) -> np.ndarray:
    data = np.asarray(measurements, dtype=np.complex128)
    if data.shape != (ops.n_tx, ops.n_rx):
        raise ValidationError(f"Measurements have shape {data.shape}, expected {(ops.n_tx, ops.n_rx)}")
    return data


def backpropagate_sources(ops: Operators, measurements: np.ndarray) -> np.ndarray:
    """
    Back-propagated contrast sources w_n = gamma_n Gd^H f_n, shape (N, P).

    gamma_n = ||Gd^H f_n||^2 / ||Gd Gd^H f_n||^2 minimizes ||f_n - Gd w_n||
    along the direction Gd^H f_n; rows with zero data give w_n = 0.
    """
    data = _check_measurements(ops, measurements)
    directions = data @ np.conj(ops.gd)
    projected = directions @ ops.gd.T

    numerator = np.sum(np.abs(directions) ** 2, axis=1)
    denominator = np.sum(np.abs(projected) ** 2, axis=1)
    gamma = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    return gamma[:, None] * directions


def contrast_from_sources(ops: Operators, sources: np.ndarray) -> np.ndarray:
    """
    Least-squares contrast from contrast sources.

    chi = sum_n w_n conj(E_n) / sum_n |E_n|^2 with E_n = e_inc_n + Gs w_n;
    pixels where every E_n vanishes get 0.
    """
    fields = ops.e_inc + sources @ ops.gs.T
    numerator = np.sum(sources * np.conj(fields), axis=0)
    denominator = np.sum(np.abs(fields) ** 2, axis=0)
    return np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)


def backpropagate(ops: Operators, measurements: np.ndarray) -> ContrastMap:
    """
    Back-propagation image from an (N, M) measurement matrix.

    Args:
        ops: Assembled operators
        measurements: Scattered fields, row n for transmitter n

    Returns:
        ContrastMap: Raw complex chi_BP
    """
    sources = backpropagate_sources(ops, measurements)
    chi = contrast_from_sources(ops, sources)
    logger.debug(f"Back-propagation image: max |chi| = {float(np.max(np.abs(chi))) if chi.size else 0.0:.4g}")
    return ContrastMap(grid=ops.grid, chi=chi)


def normalize_real(values: np.ndarray) -> np.ndarray:
    """Real part clamped at 0 and divided by its maximum; all-zero stays zero."""
    image = np.maximum(np.real(np.asarray(values)), 0.0).astype(np.float64)
    peak = float(image.max()) if image.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(image)
    return image / peak


def normalize_for_display(chi: ContrastMap) -> np.ndarray:
    """(ny, nx) display image in [0, 1]."""
    return normalize_real(chi.as_image())
