"""
Unit tests for back-propagation imaging.
"""
import numpy as np
import pytest

from scatternet.exceptions import ValidationError
from scatternet.models.fields import SolverSettings
from scatternet.models.geometry import ContrastMap
from scatternet.services.backprop_service import (
    backpropagate,
    backpropagate_sources,
    contrast_from_sources,
    normalize_for_display,
    normalize_real,
)
from scatternet.services.forward_service import assemble, simulate_fields
from scatternet.services.geometry_service import desk_configuration, rasterize_disk


class TestBackpropagate:
    """Test cases for the back-propagation image."""

    @pytest.fixture
    def weak_disk(self, small_grid):
        return rasterize_disk(small_grid, small_grid.center, 2.5 * small_grid.cell_size, 0.05)

    def test_zero_measurements_give_zero_image(self, small_ops):
        chi = backpropagate(small_ops, np.zeros((8, 8), dtype=complex))

        assert not np.any(chi.chi)

    def test_sources_shape(self, small_ops, weak_disk):
        data = simulate_fields(small_ops, weak_disk).e_sca

        assert backpropagate_sources(small_ops, data).shape == (8, 64)

    def test_optimal_scaling_reduces_data_misfit(self, small_ops, weak_disk):
        data = simulate_fields(small_ops, weak_disk).e_sca
        sources = backpropagate_sources(small_ops, data)
        misfit = data - sources @ small_ops.gd.T

        assert np.all(np.linalg.norm(misfit, axis=1) < np.linalg.norm(data, axis=1))

    def test_image_correlates_with_truth(self, small_ops, weak_disk):
        data = simulate_fields(small_ops, weak_disk).e_sca
        image = backpropagate(small_ops, data).chi.real

        assert np.corrcoef(image, weak_disk.chi.real)[0, 1] > 0.4

    def test_contrast_from_exact_sources(self, small_ops, weak_disk):
        fields = simulate_fields(small_ops, weak_disk)
        sources = weak_disk.chi[None, :] * fields.e_tot

        np.testing.assert_allclose(contrast_from_sources(small_ops, sources), weak_disk.chi, atol=1e-9)

    @pytest.mark.parametrize("scale", [3.0, -0.5 + 2.0j])
    def test_sources_scale_with_data(self, small_ops, weak_disk, scale):
        data = simulate_fields(small_ops, weak_disk).e_sca

        np.testing.assert_allclose(
            backpropagate_sources(small_ops, scale * data), scale * backpropagate_sources(small_ops, data), rtol=1e-12
        )

    def test_weak_data_image_is_linear(self, small_ops, weak_disk):
        data = 1e-4 * simulate_fields(small_ops, weak_disk).e_sca

        single = backpropagate(small_ops, data).chi
        double = backpropagate(small_ops, 2.0 * data).chi

        np.testing.assert_allclose(double, 2.0 * single, rtol=1e-3, atol=1e-3 * np.max(np.abs(single)))

    def test_point_scatterer_focuses_on_its_pixel(self):
        grid, setup = desk_configuration()
        ops = assemble(grid, setup, solver=SolverSettings(method="dense"))
        row, col = 16, 16
        values = np.zeros(grid.n_pixels, dtype=complex)
        values[row * grid.nx + col] = 0.01

        data = simulate_fields(ops, ContrastMap(grid=grid, chi=values)).e_sca
        peak = np.unravel_index(np.argmax(np.abs(backpropagate(ops, data).as_image())), grid.shape)

        assert abs(peak[0] - row) <= 1 and abs(peak[1] - col) <= 1

    def test_rejects_wrong_shape(self, small_ops):
        with pytest.raises(ValidationError):
            backpropagate(small_ops, np.zeros((8, 7)))


class TestNormalization:
    """Test cases for the display normalization."""

    def test_clamps_and_scales(self):
        values = np.array([-1.0 + 2j, 0.5, 2.0])

        np.testing.assert_allclose(normalize_real(values), [0.0, 0.25, 1.0])

    def test_all_zero_stays_zero(self):
        np.testing.assert_array_equal(normalize_real(np.zeros(4)), np.zeros(4))

    def test_display_image_shape(self, small_grid):
        chi = ContrastMap(grid=small_grid, chi=np.arange(64, dtype=float))
        image = normalize_for_display(chi)

        assert image.shape == (8, 8)
        assert image.max() == 1.0
        assert image[0, 0] == 0.0
