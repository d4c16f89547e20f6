"""
Pydantic models for the investigation domain and the antenna ring.
"""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator
from scipy import constants


class Grid(BaseModel):
    """Uniform square pixelation of the investigation domain."""
    nx: int = Field(..., gt=0, description="Cell count along x (columns)")
    ny: int = Field(..., gt=0, description="Cell count along y (rows)")
    cell_size: float = Field(..., gt=0, description="Cell edge length in meters")
    origin: Tuple[float, float] = Field((0.0, 0.0), description="Lower-left corner of the domain in meters")
    k0: float = Field(..., gt=0, description="Background wavenumber in rad/m")

    class Config:
        frozen = True

    @property
    def n_pixels(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> Tuple[int, int]:
        """Image shape (rows, cols)."""
        return (self.ny, self.nx)

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k0

    @property
    def center(self) -> Tuple[float, float]:
        return (
            self.origin[0] + 0.5 * self.nx * self.cell_size,
            self.origin[1] + 0.5 * self.ny * self.cell_size,
        )

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) in meters."""
        return (
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.nx * self.cell_size,
            self.origin[1] + self.ny * self.cell_size,
        )

    @property
    def half_diagonal(self) -> float:
        return 0.5 * self.cell_size * float(np.hypot(self.nx, self.ny))

    def centers(self) -> np.ndarray:
        """Pixel centers as a (P, 2) array in row-major pixel order."""
        cols = self.origin[0] + (np.arange(self.nx) + 0.5) * self.cell_size
        rows = self.origin[1] + (np.arange(self.ny) + 0.5) * self.cell_size
        xx, yy = np.meshgrid(cols, rows)
        return np.column_stack([xx.ravel(), yy.ravel()])


class MeasurementSetup(BaseModel):
    """Transmitter and receiver positions in the observation domain."""
    tx_positions: List[Tuple[float, float]] = Field(..., min_length=1, description="Transmitter (x, y) in meters")
    rx_positions: List[Tuple[float, float]] = Field(..., min_length=1, description="Receiver (x, y) in meters")
    frequency: float = Field(..., gt=0, description="Working frequency in Hz")

    class Config:
        frozen = True

    @validator("tx_positions", "rx_positions")
    def validate_positions(cls, v):
        """Reject empty or non-finite antenna lists."""
        if not v:
            raise ValueError("At least one antenna position is required")
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            raise ValueError("Antenna positions must be finite")
        return v

    @property
    def n_tx(self) -> int:
        return len(self.tx_positions)

    @property
    def n_rx(self) -> int:
        return len(self.rx_positions)

    @property
    def k0(self) -> float:
        return 2.0 * np.pi * self.frequency / constants.c

    @property
    def wavelength(self) -> float:
        return constants.c / self.frequency

    def tx_array(self) -> np.ndarray:
        return np.asarray(self.tx_positions, dtype=np.float64)

    def rx_array(self) -> np.ndarray:
        return np.asarray(self.rx_positions, dtype=np.float64)


class ContrastMap(BaseModel):
    """Complex contrast chi = eps_r - 1 per pixel, row-major."""
    grid: Grid = Field(..., description="Grid the contrast lives on")
    chi: np.ndarray = Field(..., description="Complex contrast per pixel, length nx*ny")

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @validator("chi", pre=True)
    def validate_chi(cls, v, values):
        """Coerce to a read-only complex vector of the grid's length."""
        chi = np.array(v, dtype=np.complex128).ravel()
        grid = values.get("grid")
        if grid is not None and chi.size != grid.n_pixels:
            raise ValueError(f"Contrast has {chi.size} entries, grid has {grid.n_pixels} pixels")
        if not np.all(np.isfinite(chi)):
            raise ValueError("Contrast must be finite")
        chi.setflags(write=False)
        return chi

    @classmethod
    def zeros(cls, grid: Grid) -> "ContrastMap":
        return cls(grid=grid, chi=np.zeros(grid.n_pixels, dtype=np.complex128))

    @classmethod
    def from_image(cls, grid: Grid, image: np.ndarray) -> "ContrastMap":
        """Build from a (ny, nx) array whose row 0 is the bottom row of the grid."""
        image = np.asarray(image)
        if image.shape != grid.shape:
            raise ValueError(f"Image shape {image.shape} does not match grid {grid.shape}")
        return cls(grid=grid, chi=image.ravel())

    def as_image(self) -> np.ndarray:
        """(ny, nx) view; row 0 is the bottom row of the grid."""
        return self.chi.reshape(self.grid.shape)

    def is_passive(self) -> bool:
        """Re and Im of chi are non-negative everywhere."""
        return bool(np.all(self.chi.real >= 0) and np.all(self.chi.imag >= 0))
