"""
Dataset construction: target shapes, simulation-driven sample building and
seeded splits.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from scatternet.exceptions import DatasetError, NonConvergenceError, ValidationError
from scatternet.models.dataset import DatasetHeader, Sample, ScatteringDataset
from scatternet.models.fields import SolverSettings
from scatternet.models.geometry import ContrastMap, Grid, MeasurementSetup
from scatternet.repositories.idx_repository import read_idx
from scatternet.services.backprop_service import backpropagate
from scatternet.services.forward_service import add_noise, assemble, simulate_fields, subcell_contrast
from scatternet.services.geometry_service import rasterize_disk, refine_grid
from scatternet.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 128
MIN_OCCUPANCY = 0.05
MAX_OCCUPANCY = 0.30
SHAPE_ATTEMPTS = 10

# 5x7 block letters, top row first
LETTER_BITMAPS = {
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
    "U": ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "B": ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
    "C": ["01111", "10000", "10000", "10000", "10000", "10000", "01111"],
}


def image_to_contrast(
    image: np.ndarray,
    grid: Grid,
    chi_value: complex,
    threshold: int = DEFAULT_THRESHOLD,
) -> ContrastMap:
    """
    Binarize a byte image and place it centered on the grid.

    Pixels >= threshold become chi_value. The image is enlarged by the largest
    integer nearest-neighbour factor that still fits, then centered. Image
    row 0 is the top row, so it lands on the highest grid row.

    Args:
        image: (H, W) uint8 image
        grid: Target grid, at least as large as the image
        chi_value: Contrast of the object pixels
        threshold: Binarization level

    Returns:
        ContrastMap: Object contrast on the grid
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValidationError(f"Expected a 2D image, got shape {image.shape}")
    height, width = image.shape
    ny, nx = grid.shape
    if height > ny or width > nx:
        raise ValidationError(f"Image {height}x{width} is larger than the grid {ny}x{nx}")

    mask = (image >= threshold).astype(np.float64)
    factor = max(1, min(ny // height, nx // width))
    scaled = np.repeat(np.repeat(mask, factor, axis=0), factor, axis=1)

    canvas = np.zeros((ny, nx), dtype=np.float64)
    top = (ny - scaled.shape[0]) // 2
    left = (nx - scaled.shape[1]) // 2
    canvas[top:top + scaled.shape[0], left:left + scaled.shape[1]] = scaled
    return ContrastMap.from_image(grid, np.flipud(canvas) * complex(chi_value))


def _random_walk_shape(rng: np.random.Generator, ny: int, nx: int) -> np.ndarray:
    """Persistent random walk stamping t x t squares until a drawn occupancy is reached."""
    thickness = int(rng.integers(2, 4))
    thickness = min(thickness, ny, nx)
    target = rng.uniform(0.08, 0.22)
    mask = np.zeros((ny, nx), dtype=bool)

    y = rng.uniform(0, ny - thickness)
    x = rng.uniform(0, nx - thickness)
    angle = rng.uniform(0, 2 * np.pi)
    max_steps = 50 * ny * nx
    for _ in range(max_steps):
        row, col = int(round(y)), int(round(x))
        mask[row:row + thickness, col:col + thickness] = True
        if mask.mean() >= target:
            break
        angle += rng.normal(0.0, 0.5)
        y += np.sin(angle)
        x += np.cos(angle)
        if y < 0 or y > ny - thickness:
            y = min(max(y, 0.0), ny - thickness)
            angle = -angle
        if x < 0 or x > nx - thickness:
            x = min(max(x, 0.0), nx - thickness)
            angle = np.pi - angle
    return mask


def _fallback_shape(ny: int, nx: int) -> np.ndarray:
    """Centered square covering about a tenth of the grid."""
    side = max(1, int(math.ceil(math.sqrt(0.1 * ny * nx))))
    side = min(side, ny, nx)
    mask = np.zeros((ny, nx), dtype=bool)
    top, left = (ny - side) // 2, (nx - side) // 2
    mask[top:top + side, left:left + side] = True
    return mask


def synth_shapes(seed: int, grid: Grid, count: int, chi_value: complex) -> List[ContrastMap]:
    """
    Deterministic connected stroke shapes covering 5-30% of the grid.

    Shape i is drawn from its own generator keyed on (seed, i), so any
    subset can be regenerated independently.
    """
    if count < 1:
        raise ValidationError(f"count must be at least 1, got {count}")
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    ny, nx = grid.shape
    if min(ny, nx) < 4:
        raise ValidationError(f"Synthetic shapes need a grid of at least 4x4, got {ny}x{nx}")

    shapes = []
    for index in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        mask = None
        for _ in range(SHAPE_ATTEMPTS):
            candidate = _random_walk_shape(rng, ny, nx)
            if MIN_OCCUPANCY <= candidate.mean() <= MAX_OCCUPANCY:
                mask = candidate
                break
        if mask is None:
            logger.debug(f"Shape {index}: random walk out of range after {SHAPE_ATTEMPTS} attempts, using fallback")
            mask = _fallback_shape(ny, nx)
        shapes.append(ContrastMap.from_image(grid, mask * complex(chi_value)))
    return shapes


def letter_phantom(letter: str, grid: Grid, chi_value: complex) -> ContrastMap:
    """Block letter (P, K, U, A, B or C) scaled onto the grid."""
    key = letter.upper()
    if key not in LETTER_BITMAPS:
        raise ValidationError(f"No bitmap for letter {letter!r}; available: {''.join(sorted(LETTER_BITMAPS))}")
    bitmap = np.array([[255 if ch == "1" else 0 for ch in row] for row in LETTER_BITMAPS[key]], dtype=np.uint8)
    return image_to_contrast(bitmap, grid, chi_value)


def foam_dielectric_phantom(grid: Grid, foam_eps_r: float = 1.45, plastic_eps_r: float = 3.0) -> ContrastMap:
    """
    Large foam disk at the grid center with a smaller plastic disk touching
    it from the left.

    Radii follow an 80 mm foam and 31 mm plastic cylinder in a 150 mm domain.
    """
    side = min(grid.nx, grid.ny) * grid.cell_size
    cx, cy = grid.center
    foam_radius = side * 40.0 / 150.0
    plastic_radius = side * 15.5 / 150.0

    foam = rasterize_disk(grid, (cx, cy), foam_radius, foam_eps_r - 1.0).chi
    plastic = rasterize_disk(grid, (cx - foam_radius - plastic_radius, cy), plastic_radius, plastic_eps_r - 1.0).chi
    return ContrastMap(grid=grid, chi=np.where(plastic != 0, plastic, foam))


def mnist_contrasts(
    path: str,
    grid: Grid,
    count: int,
    chi_value: complex,
    threshold: int = DEFAULT_THRESHOLD,
    seed: int = 0,
) -> List[ContrastMap]:
    """Seeded random subset of an IDX image file converted to contrasts."""
    images = read_idx(path)
    if count < 1 or count > len(images):
        raise DatasetError(f"Requested {count} images, file has {len(images)}")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(images), size=count, replace=False)
    logger.info(f"Converting {count} of {len(images)} IDX images from {path}")
    return [image_to_contrast(images[i], grid, chi_value, threshold) for i in picked]


def build_dataset(
    shapes: Sequence[ContrastMap],
    grid: Grid,
    setup: MeasurementSetup,
    snr_db: float = math.inf,
    seed: int = 0,
    incidence: str = "line",
    solver: Optional[SolverSettings] = None,
    threads: Optional[int] = None,
    oversample: int = 1,
) -> ScatteringDataset:
    """
    Simulate, optionally add noise, and back-propagate every shape.

    Operators are assembled once. Noise for sample i uses stream i of the
    seed, so the result is independent of the worker count.

    Args:
        shapes: Ground-truth contrasts on grid
        grid: Shared grid
        setup: Shared antenna setup
        snr_db: Noise level, +inf for noiseless
        seed: Noise seed recorded in the header
        incidence: Transmitter model
        solver: Linear-solver policy
        threads: Worker cap
        oversample: Sub-cells per pixel side of the forward solve; BP stays on grid

    Returns:
        ScatteringDataset: One sample per shape, in order
    """
    for index, shape in enumerate(shapes):
        if shape.grid != grid:
            raise DatasetError("Shape is not on the dataset grid", sample_index=index)

    if oversample < 1:
        raise ValidationError(f"oversample must be at least 1, got {oversample}")
    ops = assemble(grid, setup, incidence=incidence, solver=solver)
    forward_ops = ops
    if oversample > 1:
        forward_ops = assemble(refine_grid(grid, oversample), setup, incidence=incidence, solver=solver)
    noisy = not math.isinf(snr_db)

    def build(index: int) -> Sample:
        chi = shapes[index]
        try:
            measurements = simulate_fields(forward_ops, subcell_contrast(grid, chi, oversample), threads=1).e_sca
        except NonConvergenceError as e:
            logger.error(f"Forward solve failed for sample {index}: {e}")
            raise DatasetError(f"Forward solve failed: {e.message}", sample_index=index) from e
        if noisy:
            measurements = add_noise(measurements, snr_db, seed, stream=index)
        return Sample(chi=chi, measurements=measurements, chi_bp=backpropagate(ops, measurements))

    samples = ordered_map(build, range(len(shapes)), threads=threads)
    header = DatasetHeader(grid=grid, setup=setup, snr_db=snr_db, seed=seed, count=len(samples), incidence=incidence)
    logger.info(f"Built dataset: {len(samples)} samples, grid {grid.ny}x{grid.nx}, snr_db={snr_db}")
    return ScatteringDataset(header=header, samples=samples)


def split(
    dataset: ScatteringDataset,
    fractions: Tuple[float, float, float],
    seed: int,
) -> Tuple[ScatteringDataset, ScatteringDataset, ScatteringDataset]:
    """
    Seeded shuffle, then contiguous train/val/test blocks.

    Train and val sizes are rounded; test takes the remainder.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ValidationError(f"Expected three non-negative fractions, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValidationError(f"Fractions must sum to 1, got {sum(fractions)}")

    total = len(dataset)
    n_train = int(round(fractions[0] * total))
    n_val = int(round(fractions[1] * total))
    n_test = total - n_train - n_val
    if min(n_train, n_val, n_test) <= 0:
        raise DatasetError(f"Split of {total} samples into {n_train}/{n_val}/{n_test} leaves an empty part")

    order = np.random.default_rng(seed).permutation(total)
    parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    logger.info(f"Split {total} samples into {n_train}/{n_val}/{n_test}")
    return tuple(dataset.subset([int(i) for i in part]) for part in parts)
