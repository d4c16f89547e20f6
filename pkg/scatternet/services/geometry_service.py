"""
Investigation-domain discretization and antenna ring layout.
"""
import logging
from typing import Tuple

import numpy as np
from scipy import constants

from scatternet.exceptions import GeometryError
from scatternet.models.geometry import ContrastMap, Grid, MeasurementSetup

logger = logging.getLogger(__name__)

# Full-scale configuration
FULL_SCALE_WAVELENGTH = 0.075  # meters
FULL_SCALE_DOMAIN_WAVELENGTHS = 5.6
FULL_SCALE_GRID_CELLS = 110
FULL_SCALE_ANTENNAS = 36
FULL_SCALE_RADIUS_WAVELENGTHS = 10.0
FULL_SCALE_EPS_R = 3.0
FULL_SCALE_FREQUENCY = constants.c / FULL_SCALE_WAVELENGTH

# Desk-scale configuration, same physical proportions
DESK_GRID_CELLS = 32
DESK_ANTENNAS = 16


def make_square_grid(n_cells: int, side_length: float, frequency: float) -> Grid:
    """
    Square n_cells x n_cells grid of the given side, centered on the origin.

    Args:
        n_cells: Cells per side
        side_length: Domain side in meters
        frequency: Working frequency in Hz (sets k0)

    Returns:
        Grid: Centered grid
    """
    if n_cells <= 0 or side_length <= 0 or frequency <= 0:
        raise GeometryError("Grid needs positive cell count, side length and frequency")
    cell = side_length / n_cells
    return Grid(
        nx=n_cells,
        ny=n_cells,
        cell_size=cell,
        origin=(-0.5 * side_length, -0.5 * side_length),
        k0=2.0 * np.pi * frequency / constants.c,
    )


def make_ring_setup(
    n_tx: int,
    n_rx: int,
    radius: float,
    frequency: float,
    center: Tuple[float, float] = (0.0, 0.0),
) -> MeasurementSetup:
    """
    Transmitters at angles 2*pi*n/N and receivers at 2*pi*m/M on one circle.

    Args:
        n_tx: Transmitter count N
        n_rx: Receiver count M
        radius: Ring radius in meters
        frequency: Working frequency in Hz
        center: Ring center, normally the grid center

    Returns:
        MeasurementSetup: Ring geometry
    """
    if n_tx < 1 or n_rx < 1:
        raise GeometryError(f"Ring needs at least one transmitter and receiver, got N={n_tx}, M={n_rx}")
    if radius <= 0:
        raise GeometryError(f"Ring radius must be positive, got {radius}")

    def ring(count: int):
        angles = 2.0 * np.pi * np.arange(count) / count
        return [
            (center[0] + radius * float(np.cos(a)), center[1] + radius * float(np.sin(a)))
            for a in angles
        ]

    setup = MeasurementSetup(tx_positions=ring(n_tx), rx_positions=ring(n_rx), frequency=frequency)
    logger.info(f"Ring setup: {n_tx} Tx / {n_rx} Rx at radius {radius:.4g} m, f={frequency:.4g} Hz")
    return setup


def check_pairing(grid: Grid, setup: MeasurementSetup) -> None:
    """Raise GeometryError unless every antenna lies strictly outside the grid's bounding box."""
    xmin, ymin, xmax, ymax = grid.bounds
    for label, positions in (("transmitter", setup.tx_array()), ("receiver", setup.rx_array())):
        inside = (
            (positions[:, 0] >= xmin) & (positions[:, 0] <= xmax)
            & (positions[:, 1] >= ymin) & (positions[:, 1] <= ymax)
        )
        if np.any(inside):
            index = int(np.flatnonzero(inside)[0])
            raise GeometryError(f"{label} {index} at {tuple(positions[index])} lies inside the investigation domain")

    if not np.isclose(grid.k0, setup.k0, rtol=1e-9):
        raise GeometryError(f"Grid wavenumber {grid.k0:.6g} does not match setup wavenumber {setup.k0:.6g}")


def pixel_center(grid: Grid, p: int) -> Tuple[float, float]:
    """Center (x, y) of row-major pixel p."""
    if not 0 <= p < grid.n_pixels:
        raise GeometryError(f"Pixel index {p} outside [0, {grid.n_pixels})")
    row, col = divmod(p, grid.nx)
    return (
        grid.origin[0] + (col + 0.5) * grid.cell_size,
        grid.origin[1] + (row + 0.5) * grid.cell_size,
    )


def rasterize_disk(
    grid: Grid,
    center: Tuple[float, float],
    radius: float,
    chi_value: complex,
    supersample: int = 1,
) -> ContrastMap:
    """
    Pixels whose centers lie inside the disk get chi_value, all others 0.

    With supersample > 1 each pixel is probed on a supersample x supersample
    sub-grid and receives chi_value times the covered fraction.
    """
    if radius <= 0:
        raise GeometryError(f"Disk radius must be positive, got {radius}")
    if supersample < 1:
        raise GeometryError(f"supersample must be at least 1, got {supersample}")

    centers = grid.centers()
    if supersample == 1:
        inside = np.hypot(centers[:, 0] - center[0], centers[:, 1] - center[1]) <= radius
        return ContrastMap(grid=grid, chi=np.where(inside, complex(chi_value), 0.0 + 0.0j))

    offsets = ((np.arange(supersample) + 0.5) / supersample - 0.5) * grid.cell_size
    ox, oy = np.meshgrid(offsets, offsets)
    px = centers[:, 0:1] + ox.ravel()[None, :]
    py = centers[:, 1:2] + oy.ravel()[None, :]
    fraction = np.mean(np.hypot(px - center[0], py - center[1]) <= radius, axis=1)
    return ContrastMap(grid=grid, chi=complex(chi_value) * fraction)


def refine_grid(grid: Grid, factor: int) -> Grid:
    """Same domain and wavenumber, every cell split into factor x factor sub-cells."""
    if factor < 1:
        raise GeometryError(f"Refinement factor must be at least 1, got {factor}")
    if factor == 1:
        return grid
    return Grid(
        nx=grid.nx * factor,
        ny=grid.ny * factor,
        cell_size=grid.cell_size / factor,
        origin=grid.origin,
        k0=grid.k0,
    )


def refine_contrast(chi: ContrastMap, factor: int) -> ContrastMap:
    """Copy every pixel value onto its sub-cells of refine_grid(chi.grid, factor)."""
    if factor == 1:
        return chi
    fine = refine_grid(chi.grid, factor)
    image = np.kron(chi.as_image(), np.ones((factor, factor)))
    return ContrastMap.from_image(fine, image)


def coarsen_contrast(chi: ContrastMap, grid: Grid) -> ContrastMap:
    """
    Block-average a contrast on a refinement of grid back onto grid.

    Raises:
        GeometryError: chi.grid is not refine_grid(grid, s) for an integer s
    """
    factor = chi.grid.nx // grid.nx
    if factor < 1 or chi.grid != refine_grid(grid, factor):
        raise GeometryError("Contrast grid is not a refinement of the target grid")
    if factor == 1:
        return chi
    image = chi.as_image().reshape(grid.ny, factor, grid.nx, factor).mean(axis=(1, 3))
    return ContrastMap.from_image(grid, image)


def full_scale_configuration() -> Tuple[Grid, MeasurementSetup]:
    """110x110 grid over 5.6 wavelengths, 36 Tx / 36 Rx at 10 wavelengths."""
    grid = make_square_grid(FULL_SCALE_GRID_CELLS, FULL_SCALE_DOMAIN_WAVELENGTHS * FULL_SCALE_WAVELENGTH, FULL_SCALE_FREQUENCY)
    setup = make_ring_setup(
        FULL_SCALE_ANTENNAS, FULL_SCALE_ANTENNAS, FULL_SCALE_RADIUS_WAVELENGTHS * FULL_SCALE_WAVELENGTH, FULL_SCALE_FREQUENCY
    )
    return grid, setup


def desk_configuration(
    n_cells: int = DESK_GRID_CELLS,
    n_antennas: int = DESK_ANTENNAS,
) -> Tuple[Grid, MeasurementSetup]:
    """Full-scale proportions at desk scale: 32x32 grid, 16 Tx / 16 Rx by default."""
    grid = make_square_grid(n_cells, FULL_SCALE_DOMAIN_WAVELENGTHS * FULL_SCALE_WAVELENGTH, FULL_SCALE_FREQUENCY)
    setup = make_ring_setup(
        n_antennas, n_antennas, FULL_SCALE_RADIUS_WAVELENGTHS * FULL_SCALE_WAVELENGTH, FULL_SCALE_FREQUENCY
    )
    return grid, setup
