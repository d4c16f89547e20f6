"""
Unit tests for SSIM, MSE, histograms and quality reports.
"""
import numpy as np
import pytest

from scatternet.exceptions import ValidationError
from scatternet.models.geometry import ContrastMap
from scatternet.repositories.report_repository import encode_pgm, write_report
from scatternet.services.metrics_service import (
    SSIM_C1,
    build_quality_report,
    histogram,
    image_grid,
    mse,
    ssim,
)


@pytest.fixture
def disk_image():
    yy, xx = np.mgrid[0:32, 0:32]
    return (np.hypot(yy - 15.5, xx - 15.5) < 8).astype(float)


class TestImageMetrics:
    """Test cases for ssim and mse."""

    def test_identical_images(self, disk_image):
        assert ssim(disk_image, disk_image) == pytest.approx(1.0, abs=1e-12)
        assert mse(disk_image, disk_image) == 0.0

    def test_mse_value(self):
        assert mse(np.zeros((2, 2)), np.full((2, 2), 0.5)) == pytest.approx(0.25)

    @pytest.mark.parametrize("a, b", [(0.2, 0.7), (1.0, 0.0), (0.5, 0.5)])
    def test_constant_images(self, a, b):
        expected = (2 * a * b + SSIM_C1) / (a * a + b * b + SSIM_C1)

        assert ssim(np.full((16, 16), a), np.full((16, 16), b)) == pytest.approx(expected, abs=1e-12)

    def test_noise_ladder(self, disk_image):
        rng = np.random.default_rng(0)
        noise = rng.standard_normal(disk_image.shape)
        scores = [ssim(disk_image, disk_image + level * noise) for level in (0.05, 0.1, 0.2, 0.4)]
        errors = [mse(disk_image, disk_image + level * noise) for level in (0.05, 0.1, 0.2, 0.4)]

        assert scores == sorted(scores, reverse=True)
        assert errors == sorted(errors)

    def test_symmetric(self, disk_image):
        other = np.roll(disk_image, 3, axis=1)

        assert ssim(disk_image, other) == pytest.approx(ssim(other, disk_image), abs=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            ssim(np.zeros((4, 4)), np.zeros((4, 5)))
        with pytest.raises(ValidationError):
            mse(np.zeros((0,)), np.zeros((0,)))


class TestHistogram:
    """Test cases for histogram."""

    def test_counts_with_clipping(self):
        result = histogram([0.05, 0.15, 0.95, 1.5, -0.2], 10, (0.0, 1.0))

        assert result.counts == [2.0, 1.0, 0, 0, 0, 0, 0, 0, 0, 2.0]
        np.testing.assert_allclose(result.edges, np.linspace(0.0, 1.0, 11))

    def test_normalized(self):
        result = histogram([0.1, 0.2, 0.3, 0.9], 4, (0.0, 1.0), normalized=True)

        assert sum(result.counts) == pytest.approx(1.0)
        assert result.counts == [0.5, 0.25, 0.0, 0.25]

    def test_empty(self):
        assert histogram([], 3, (0.0, 1.0)).counts == [0.0, 0.0, 0.0]

    @pytest.mark.parametrize("bins, value_range", [(0, (0.0, 1.0)), (3, (1.0, 1.0))])
    def test_invalid(self, bins, value_range):
        with pytest.raises(ValidationError):
            histogram([0.5], bins, value_range)


class TestQualityReport:
    """Test cases for build_quality_report and image_grid."""

    @pytest.fixture
    def maps(self, small_grid):
        rng = np.random.default_rng(1)
        truths = [ContrastMap(grid=small_grid, chi=rng.uniform(0, 2, 64) + 0j) for _ in range(5)]
        noisy = [ContrastMap(grid=small_grid, chi=t.chi + rng.uniform(0, 0.5, 64)) for t in truths]
        return truths, noisy

    def test_perfect_reconstruction(self, maps):
        truths, _ = maps
        report = build_quality_report(truths, truths, n_bins=5, label="exact")

        assert len(report) == 5
        assert report.mean_ssim == pytest.approx(1.0, abs=1e-12)
        assert report.mean_mse == 0.0
        assert report.mse_histogram.value_range == (0.0, 1.0)
        assert report.ssim_histogram.counts[-1] == pytest.approx(1.0)

    def test_scores_and_display_images(self, maps):
        truths, noisy = maps
        report = build_quality_report(truths, noisy, n_bins=4)

        assert 0.0 < report.mean_ssim < 1.0
        assert report.mse_histogram.value_range == (0.0, max(report.mse))
        assert sum(report.mse_histogram.counts) == pytest.approx(1.0)
        assert all(image.max() == pytest.approx(1.0) for image in report.reconstructions)
        assert report.truths[0].shape == (8, 8)

    def test_worker_count_does_not_change_scores(self, maps):
        truths, noisy = maps

        serial = build_quality_report(truths, noisy, threads=1)
        parallel = build_quality_report(truths, noisy, threads=3)

        assert serial.ssim == parallel.ssim
        assert serial.mse == parallel.mse

    def test_length_mismatch(self, maps):
        truths, noisy = maps

        with pytest.raises(ValidationError):
            build_quality_report(truths, noisy[:-1])

    def test_write_report(self, maps, tmp_path):
        truths, noisy = maps
        report = build_quality_report(truths, noisy, n_bins=4)

        written = write_report(report, tmp_path / "run")
        names = [path.name for path in written]

        assert names[:3] == ["run_metrics.csv", "run_ssim_hist.csv", "run_mse_hist.csv"]
        assert "run_00004_truth.pgm" in names
        assert len(written) == 3 + 2 * 5
        lines = (tmp_path / "run_metrics.csv").read_text().splitlines()
        assert lines[0] == "index,ssim,mse"
        assert len(lines) == 6
        assert len((tmp_path / "run_ssim_hist.csv").read_text().splitlines()) == 5

    def test_write_report_without_images(self, maps, tmp_path):
        truths, noisy = maps

        assert len(write_report(build_quality_report(truths, noisy), tmp_path / "run", images=False)) == 3

    def test_image_grid_layout(self):
        tiles = [np.full((2, 2), v) for v in (0.25, 0.5, 0.75)]
        canvas = image_grid(tiles, columns=2)

        assert canvas.shape == (4, 4)
        assert np.all(canvas[2:, :2] == 0.25)
        assert np.all(canvas[2:, 2:] == 0.5)
        assert np.all(canvas[:2, :2] == 0.75)
        assert np.all(canvas[:2, 2:] == 0.0)

    def test_first_tile_is_written_top_left(self):
        canvas = image_grid([np.ones((1, 1)), np.zeros((1, 1))], columns=1)

        assert encode_pgm(canvas)[-2:] == bytes([255, 0])

    def test_image_grid_rejects_mixed_shapes(self):
        with pytest.raises(ValidationError):
            image_grid([np.zeros((2, 2)), np.zeros((3, 3))], columns=2)
