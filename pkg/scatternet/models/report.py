"""
Pydantic models for reconstruction-quality reports.
"""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator


class Histogram(BaseModel):
    """Uniform-bin histogram; counts may be normalized to sum to 1."""
    counts: List[float]
    value_range: Tuple[float, float]
    normalized: bool = False

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.value_range[0], self.value_range[1], len(self.counts) + 1)


class QualityReport(BaseModel):
    """Per-sample SSIM/MSE with aggregates, histograms and display images."""
    label: str = Field("reconstruction", description="Name of the reconstruction being scored")
    ssim: List[float] = Field(default_factory=list)
    mse: List[float] = Field(default_factory=list)
    ssim_histogram: Histogram
    mse_histogram: Histogram
    truths: List[np.ndarray] = Field(default_factory=list, description="Display images of the ground truths")
    reconstructions: List[np.ndarray] = Field(default_factory=list, description="Display images of the reconstructions")

    class Config:
        arbitrary_types_allowed = True

    @validator("mse")
    def validate_lengths(cls, v, values):
        ssim = values.get("ssim")
        if ssim is not None and len(ssim) != len(v):
            raise ValueError(f"{len(ssim)} SSIM values but {len(v)} MSE values")
        return v

    def __len__(self) -> int:
        return len(self.ssim)

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else 0.0

    @property
    def std_ssim(self) -> float:
        return float(np.std(self.ssim)) if self.ssim else 0.0

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.mse)) if self.mse else 0.0

    @property
    def std_mse(self) -> float:
        return float(np.std(self.mse)) if self.mse else 0.0
