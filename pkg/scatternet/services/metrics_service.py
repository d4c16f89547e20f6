"""
Reconstruction-quality metrics on display-normalized images.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from sklearn.metrics import mean_squared_error

from scatternet.exceptions import ValidationError
from scatternet.models.geometry import ContrastMap
from scatternet.models.report import Histogram, QualityReport
from scatternet.services.backprop_service import normalize_for_display
from scatternet.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # 11x11 window at sigma 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"Image shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValidationError("Images are empty")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean of squared differences."""
    a, b = _pair(a, b)
    return float(mean_squared_error(a.ravel(), b.ravel()))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """
    Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
    C1 = 0.01^2, C2 = 0.03^2 for unit dynamic range and reflective borders.
    """
    a, b = _pair(a, b)

    def blur(image: np.ndarray) -> np.ndarray:
        return ndimage.gaussian_filter(image, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect")

    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a * mu_a
    var_b = blur(b * b) - mu_b * mu_b
    cov = blur(a * b) - mu_a * mu_b

    ssim_map = ((2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)) / (
        (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    )
    return float(np.mean(ssim_map))


def histogram(
    values: Sequence[float],
    n_bins: int,
    value_range: Tuple[float, float],
    normalized: bool = False,
) -> Histogram:
    """
    Uniform bins over value_range; values outside are counted in the end bins.

    Args:
        values: Samples
        n_bins: Bin count (>= 1)
        value_range: (low, high)
        normalized: Divide counts by the sample count

    Returns:
        Histogram: Counts summing to len(values), or 1 when normalized
    """
    if n_bins < 1:
        raise ValidationError(f"n_bins must be at least 1, got {n_bins}")
    low, high = float(value_range[0]), float(value_range[1])
    if not high > low:
        raise ValidationError(f"Histogram range must be increasing, got {value_range}")

    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size == 0:
        return Histogram(counts=[0.0] * n_bins, value_range=(low, high), normalized=normalized)

    counts, _ = np.histogram(np.clip(data, low, high), bins=n_bins, range=(low, high))
    counts = counts.astype(np.float64)
    if normalized:
        counts /= data.size
    return Histogram(counts=counts.tolist(), value_range=(low, high), normalized=normalized)


def build_quality_report(
    truths: Sequence[ContrastMap],
    reconstructions: Sequence[ContrastMap],
    n_bins: int = 10,
    label: str = "reconstruction",
    normalized: bool = True,
    threads: Optional[int] = None,
) -> QualityReport:
    """
    Score reconstructions against ground truths.

    Both sides are display-normalized (real part, clamped, divided by their
    own maximum) before SSIM and MSE are taken.
    """
    if len(truths) != len(reconstructions):
        raise ValidationError(f"{len(truths)} ground truths but {len(reconstructions)} reconstructions")

    def score(index: int):
        truth = normalize_for_display(truths[index])
        recon = normalize_for_display(reconstructions[index])
        return truth, recon, ssim(recon, truth), mse(recon, truth)

    scored = ordered_map(score, range(len(truths)), threads=threads)
    ssim_values = [s[2] for s in scored]
    mse_values = [s[3] for s in scored]
    mse_high = max(mse_values) if mse_values and max(mse_values) > 0 else 1.0

    report = QualityReport(
        label=label,
        ssim=ssim_values,
        mse=mse_values,
        ssim_histogram=histogram(ssim_values, n_bins, (0.0, 1.0), normalized),
        mse_histogram=histogram(mse_values, n_bins, (0.0, mse_high), normalized),
        truths=[s[0] for s in scored],
        reconstructions=[s[1] for s in scored],
    )
    logger.info(f"{label}: mean SSIM {report.mean_ssim:.4f} (std {report.std_ssim:.4f}), "
                f"mean MSE {report.mean_mse:.4f} (std {report.std_mse:.4f}) over {len(report)} samples")
    return report


def image_grid(images: List[np.ndarray], columns: int) -> np.ndarray:
    """
    Tile equally sized display images row by row; empty cells stay 0.

    Like the images, the canvas has its bottom row first, so the first tile
    lands top-left once the canvas is written as a PGM.
    """
    if columns < 1:
        raise ValidationError(f"columns must be at least 1, got {columns}")
    if not images:
        raise ValidationError("No images to tile")
    height, width = np.asarray(images[0]).shape
    rows = -(-len(images) // columns)
    canvas = np.zeros((rows * height, columns * width), dtype=np.float64)
    for index, image in enumerate(images):
        image = np.asarray(image, dtype=np.float64)
        if image.shape != (height, width):
            raise ValidationError(f"Image {index} has shape {image.shape}, expected {(height, width)}")
        r, c = divmod(index, columns)
        r = rows - 1 - r
        canvas[r * height:(r + 1) * height, c * width:(c + 1) * width] = image
    return canvas
