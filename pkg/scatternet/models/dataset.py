"""
Pydantic models for simulated scattering datasets.
"""
import math
from typing import List, Literal, Sequence

import numpy as np
from pydantic import BaseModel, Field, validator

from scatternet.models.geometry import ContrastMap, Grid, MeasurementSetup


class DatasetHeader(BaseModel):
    """Shared geometry and generation policy of a dataset."""
    grid: Grid
    setup: MeasurementSetup
    snr_db: float = Field(math.inf, description="Noise level of the stored measurements, inf when noiseless")
    seed: int = Field(0, ge=0, description="Base seed used for shapes and noise")
    count: int = Field(0, ge=0, description="Number of samples")
    incidence: Literal["line", "plane"] = Field("line", description="Transmitter model used for simulation")

    class Config:
        frozen = True

    @validator("snr_db")
    def validate_snr(cls, v):
        if math.isnan(v) or v == -math.inf:
            raise ValueError("snr_db must be finite or +inf")
        return v


class Sample(BaseModel):
    """Ground truth, measurements and back-propagation image of one target."""
    chi: ContrastMap
    measurements: np.ndarray
    chi_bp: ContrastMap

    class Config:
        arbitrary_types_allowed = True

    @validator("measurements")
    def validate_measurements(cls, v):
        data = np.array(v, dtype=np.complex128)
        if data.ndim != 2:
            raise ValueError(f"Measurements must be an (N, M) matrix, got shape {data.shape}")
        data.setflags(write=False)
        return data


class ScatteringDataset(BaseModel):
    """Samples sharing one grid and one antenna setup."""
    header: DatasetHeader
    samples: List[Sample] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True

    @validator("samples")
    def validate_samples(cls, v, values):
        """Every sample must live on the header's grid and setup."""
        header = values.get("header")
        if header is None:
            return v
        if len(v) != header.count:
            raise ValueError(f"Header declares {header.count} samples, got {len(v)}")
        expected = (header.setup.n_tx, header.setup.n_rx)
        for index, sample in enumerate(v):
            if sample.chi.grid != header.grid or sample.chi_bp.grid != header.grid:
                raise ValueError(f"Sample {index} is on a different grid")
            if sample.measurements.shape != expected:
                raise ValueError(f"Sample {index} measurements have shape {sample.measurements.shape}, expected {expected}")
        return v

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def grid(self) -> Grid:
        return self.header.grid

    @property
    def setup(self) -> MeasurementSetup:
        return self.header.setup

    def subset(self, indices: Sequence[int]) -> "ScatteringDataset":
        """New dataset with the given samples, in the given order."""
        picked = [self.samples[i] for i in indices]
        header = self.header.model_copy(update={"count": len(picked)})
        return ScatteringDataset(header=header, samples=picked)

    def inputs(self) -> np.ndarray:
        """(S, 1, ny, nx) back-propagation images for the network."""
        return self._stack([s.chi_bp for s in self.samples])

    def targets(self) -> np.ndarray:
        """(S, 1, ny, nx) ground-truth contrasts."""
        return self._stack([s.chi for s in self.samples])

    def _stack(self, maps: List[ContrastMap]) -> np.ndarray:
        shape = (len(maps), 1) + self.grid.shape
        if not maps:
            return np.zeros(shape, dtype=np.complex128)
        return np.stack([m.as_image() for m in maps])[:, None].reshape(shape)
