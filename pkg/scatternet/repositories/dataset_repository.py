"""
Repository for the NISD dataset container.

Layout: magic "NISD", u32 LE version, u32 LE header length, UTF-8 header of
key=value lines, then per sample the contrast, the (N, M) measurements and
the back-propagation image as little-endian complex128, row-major.
"""
import logging
import struct
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from scatternet.exceptions import FormatError, StorageError
from scatternet.models.dataset import DatasetHeader, Sample, ScatteringDataset
from scatternet.models.geometry import ContrastMap, Grid, MeasurementSetup

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"NISD"
DATASET_VERSION = 1
COMPLEX_LE = np.dtype("<c16")

_REQUIRED_KEYS = (
    "nx", "ny", "cell_size", "origin_x", "origin_y", "k0", "frequency",
    "n_tx", "n_rx", "tx_x", "tx_y", "rx_x", "rx_y",
    "snr_db", "seed", "count", "incidence",
)


def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",")] if text else []


class DatasetRepository:
    """Encodes and decodes ScatteringDataset objects."""

    def _header_text(self, header: DatasetHeader) -> str:
        grid, setup = header.grid, header.setup
        tx, rx = setup.tx_array(), setup.rx_array()
        lines = [
            f"nx={grid.nx}",
            f"ny={grid.ny}",
            f"cell_size={grid.cell_size!r}",
            f"origin_x={float(grid.origin[0])!r}",
            f"origin_y={float(grid.origin[1])!r}",
            f"k0={grid.k0!r}",
            f"frequency={float(setup.frequency)!r}",
            f"n_tx={setup.n_tx}",
            f"n_rx={setup.n_rx}",
            f"tx_x={_floats(tx[:, 0])}",
            f"tx_y={_floats(tx[:, 1])}",
            f"rx_x={_floats(rx[:, 0])}",
            f"rx_y={_floats(rx[:, 1])}",
            f"snr_db={float(header.snr_db)!r}",
            f"seed={header.seed}",
            f"count={header.count}",
            f"incidence={header.incidence}",
        ]
        return "\n".join(lines) + "\n"

    def _parse_header(self, text: str) -> DatasetHeader:
        fields: Dict[str, str] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            if "=" not in line:
                raise FormatError(f"Malformed NISD header line {line!r}")
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
        missing = [key for key in _REQUIRED_KEYS if key not in fields]
        if missing:
            raise FormatError(f"NISD header missing keys: {', '.join(missing)}")

        try:
            tx = list(zip(_parse_floats(fields["tx_x"]), _parse_floats(fields["tx_y"])))
            rx = list(zip(_parse_floats(fields["rx_x"]), _parse_floats(fields["rx_y"])))
            if len(tx) != int(fields["n_tx"]) or len(rx) != int(fields["n_rx"]):
                raise FormatError("NISD header antenna counts disagree with positions",
                                  expected=(fields["n_tx"], fields["n_rx"]), actual=(len(tx), len(rx)))
            grid = Grid(
                nx=int(fields["nx"]),
                ny=int(fields["ny"]),
                cell_size=float(fields["cell_size"]),
                origin=(float(fields["origin_x"]), float(fields["origin_y"])),
                k0=float(fields["k0"]),
            )
            setup = MeasurementSetup(tx_positions=tx, rx_positions=rx, frequency=float(fields["frequency"]))
            snr = float(fields["snr_db"])
            return DatasetHeader(
                grid=grid,
                setup=setup,
                snr_db=snr,
                seed=int(fields["seed"]),
                count=int(fields["count"]),
                incidence=fields["incidence"],
            )
        except (ValueError, PydanticValidationError) as e:
            raise FormatError(f"Invalid NISD header: {e}") from e

    def encode(self, dataset: ScatteringDataset) -> bytes:
        header = self._header_text(dataset.header).encode("utf-8")
        parts = [DATASET_MAGIC, struct.pack("<II", DATASET_VERSION, len(header)), header]
        for sample in dataset.samples:
            parts.append(np.ascontiguousarray(sample.chi.chi, dtype=COMPLEX_LE).tobytes())
            parts.append(np.ascontiguousarray(sample.measurements, dtype=COMPLEX_LE).tobytes())
            parts.append(np.ascontiguousarray(sample.chi_bp.chi, dtype=COMPLEX_LE).tobytes())
        return b"".join(parts)

    def decode(self, payload: bytes) -> ScatteringDataset:
        if payload[:4] != DATASET_MAGIC:
            raise FormatError("Not an NISD file", expected=DATASET_MAGIC, actual=payload[:4])
        if len(payload) < 12:
            raise FormatError("NISD preamble truncated", expected=12, actual=len(payload))
        version, header_length = struct.unpack("<II", payload[4:12])
        if version != DATASET_VERSION:
            raise FormatError(f"Unsupported NISD version {version}", expected=DATASET_VERSION, actual=version)
        if len(payload) < 12 + header_length:
            raise FormatError("NISD header truncated", expected=12 + header_length, actual=len(payload))
        try:
            text = payload[12:12 + header_length].decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"NISD header is not UTF-8: {e}") from e
        header = self._parse_header(text)

        grid = header.grid
        n_pixels = grid.n_pixels
        n_tx, n_rx = header.setup.n_tx, header.setup.n_rx
        per_sample = (2 * n_pixels + n_tx * n_rx) * COMPLEX_LE.itemsize
        body = payload[12 + header_length:]
        expected = per_sample * header.count
        if len(body) != expected:
            raise FormatError(f"NISD body size mismatch: expected {expected} bytes, got {len(body)}",
                              expected=expected, actual=len(body))

        values = np.frombuffer(body, dtype=COMPLEX_LE).astype(np.complex128)
        stride = 2 * n_pixels + n_tx * n_rx
        samples = []
        for index in range(header.count):
            block = values[index * stride:(index + 1) * stride]
            samples.append(Sample(
                chi=ContrastMap(grid=grid, chi=block[:n_pixels]),
                measurements=block[n_pixels:n_pixels + n_tx * n_rx].reshape(n_tx, n_rx),
                chi_bp=ContrastMap(grid=grid, chi=block[n_pixels + n_tx * n_rx:]),
            ))
        return ScatteringDataset(header=header, samples=samples)

    def write(self, dataset: ScatteringDataset, path: Union[str, Path]) -> None:
        try:
            Path(path).write_bytes(self.encode(dataset))
        except OSError as e:
            logger.error(f"Cannot write dataset {path}: {e}")
            raise StorageError(f"Cannot write dataset ({e.strerror})", path=str(path)) from e
        logger.info(f"Wrote {len(dataset)} samples to {path}")

    def read(self, path: Union[str, Path]) -> ScatteringDataset:
        try:
            payload = Path(path).read_bytes()
        except OSError as e:
            logger.error(f"Cannot read dataset {path}: {e}")
            raise StorageError(f"Cannot read dataset ({e.strerror})", path=str(path)) from e
        dataset = self.decode(payload)
        logger.info(f"Read {len(dataset)} samples from {path} (snr_db={dataset.header.snr_db})")
        return dataset


dataset_repository = DatasetRepository()


def write_dataset(dataset: ScatteringDataset, path: Union[str, Path]) -> None:
    dataset_repository.write(dataset, path)


def read_dataset(path: Union[str, Path]) -> ScatteringDataset:
    return dataset_repository.read(path)
