"""
Shared fixtures: small grids and rings that solve in milliseconds.
"""
import numpy as np
import pytest

from scatternet.models.fields import SolverSettings
from scatternet.models.geometry import ContrastMap
from scatternet.services.forward_service import assemble
from scatternet.services.geometry_service import FULL_SCALE_FREQUENCY, FULL_SCALE_WAVELENGTH, make_ring_setup, make_square_grid


@pytest.fixture
def wavelength():
    return FULL_SCALE_WAVELENGTH


@pytest.fixture
def small_grid(wavelength):
    """8x8 grid at 10 cells per wavelength."""
    return make_square_grid(8, 0.8 * wavelength, FULL_SCALE_FREQUENCY)


@pytest.fixture
def small_setup(wavelength):
    """8 Tx / 8 Rx on a ring of 3 wavelengths."""
    return make_ring_setup(8, 8, 3.0 * wavelength, FULL_SCALE_FREQUENCY)


@pytest.fixture
def small_ops(small_grid, small_setup):
    return assemble(small_grid, small_setup)


@pytest.fixture
def dense_ops(small_grid, small_setup):
    return assemble(small_grid, small_setup, solver=SolverSettings(method="dense"))


@pytest.fixture
def random_chi(small_grid):
    """Passive random contrast with |chi| <= 2."""
    rng = np.random.default_rng(7)
    magnitude = rng.uniform(0.0, 2.0, small_grid.n_pixels)
    phase = rng.uniform(0.0, 0.5 * np.pi, small_grid.n_pixels)
    return ContrastMap(grid=small_grid, chi=magnitude * np.exp(1j * phase))
