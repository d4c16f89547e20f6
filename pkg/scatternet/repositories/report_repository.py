"""
Repository for report artifacts: metric/trace/history CSVs and P5 PGM images.
"""
import csv
import io
import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from scatternet.exceptions import StorageError, ValidationError
from scatternet.models.inversion import InversionTrace
from scatternet.models.network import TrainingHistory
from scatternet.models.report import Histogram, QualityReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def encode_pgm(image: np.ndarray) -> bytes:
    """
    8-bit binary PGM of a [0, 1] display image.

    Row 0 of the array is the bottom of the domain, so rows are flipped to
    put the top of the domain first in the file.
    """
    data = np.asarray(image, dtype=np.float64)
    if data.ndim != 2 or data.size == 0:
        raise ValidationError(f"PGM images must be non-empty 2D arrays, got shape {data.shape}")
    height, width = data.shape
    pixels = np.round(np.clip(np.nan_to_num(data), 0.0, 1.0) * 255.0).astype(np.uint8)
    return f"P5\n{width} {height}\n255\n".encode("ascii") + np.flipud(pixels).tobytes()


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


class ReportRepository:
    """Writes report artifacts; every write is a single whole-file write."""

    def _write(self, path: PathLike, payload: Union[str, bytes]) -> Path:
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(payload, str):
                target.write_text(payload, encoding="utf-8")
            else:
                target.write_bytes(payload)
        except OSError as e:
            logger.error(f"Cannot write {target}: {e}")
            raise StorageError(f"Cannot write report file ({e.strerror})", path=str(target)) from e
        return target

    def write_pgm(self, image: np.ndarray, path: PathLike) -> Path:
        return self._write(path, encode_pgm(image))

    def write_metrics_csv(self, report: QualityReport, path: PathLike) -> Path:
        rows = [(i, s, m) for i, (s, m) in enumerate(zip(report.ssim, report.mse))]
        return self._write(path, _csv_text(("index", "ssim", "mse"), rows))

    def write_histogram_csv(self, histogram: Histogram, path: PathLike) -> Path:
        edges = histogram.edges
        rows = [(edges[i], edges[i + 1], c) for i, c in enumerate(histogram.counts)]
        return self._write(path, _csv_text(("bin_low", "bin_high", "count"), rows))

    def write_trace_csv(self, trace: InversionTrace, path: PathLike) -> Path:
        rows = [(r.iteration, r.data_residual, r.objective) for r in trace.records]
        return self._write(path, _csv_text(("iteration", "data_residual", "objective"), rows))

    def write_history_csv(self, history: TrainingHistory, path: PathLike) -> Path:
        n_rates = max((len(r.learning_rates) for r in history.records), default=0)
        header = ["epoch", "stage", "module", "train_loss", "val_loss"] + [f"lr_{k}" for k in range(n_rates)]
        rows = [
            [r.epoch, r.stage, "" if r.module is None else r.module, r.train_loss, r.val_loss] + list(r.learning_rates)
            for r in history.records
        ]
        return self._write(path, _csv_text(header, rows))

    def write_report(self, report: QualityReport, prefix: PathLike, images: bool = True) -> List[Path]:
        """
        Emit `<prefix>_metrics.csv`, SSIM/MSE histogram CSVs and, with images,
        one PGM per sample for reconstruction and ground truth.

        Returns:
            List[Path]: Files written, in a stable order
        """
        prefix = str(prefix)
        written = [
            self.write_metrics_csv(report, f"{prefix}_metrics.csv"),
            self.write_histogram_csv(report.ssim_histogram, f"{prefix}_ssim_hist.csv"),
            self.write_histogram_csv(report.mse_histogram, f"{prefix}_mse_hist.csv"),
        ]
        pairs = zip(report.reconstructions, report.truths) if images else ()
        for index, (recon, truth) in enumerate(pairs):
            written.append(self.write_pgm(recon, f"{prefix}_{index:05d}_recon.pgm"))
            written.append(self.write_pgm(truth, f"{prefix}_{index:05d}_truth.pgm"))
        logger.info(f"Wrote {len(written)} report files with prefix {prefix}")
        return written


report_repository = ReportRepository()


def write_report(report: QualityReport, prefix: PathLike, images: bool = True) -> List[Path]:
    return report_repository.write_report(report, prefix, images=images)


def write_pgm(image: np.ndarray, path: PathLike) -> Path:
    return report_repository.write_pgm(image, path)


def write_trace_csv(trace: InversionTrace, path: PathLike) -> Path:
    return report_repository.write_trace_csv(trace, path)


def write_history_csv(history: TrainingHistory, path: PathLike) -> Path:
    return report_repository.write_history_csv(history, path)
