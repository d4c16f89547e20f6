"""
Pydantic models for classical inversion settings and iteration traces.
"""
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, validator


class InversionConfig(BaseModel):
    """Settings shared by the distorted-Born and CSI solvers."""
    max_iters: int = Field(10, ge=1, description="Outer iterations")
    threshold_tau: float = Field(0.0, ge=0, description="Soft-threshold level on the transformed contrast")
    cg_iters: int = Field(50, ge=1, description="Conjugate-gradient cap for the Gauss-Newton step")
    cg_tol: float = Field(1e-6, gt=0, description="Relative residual target of the normal-equation CG")
    tikhonov_eps: float = Field(0.0, ge=0, description="Damping added to the normal equations")
    transform: Literal["identity", "haar"] = Field("identity", description="Sparsifying transform D")
    improvement_floor: float = Field(1e-4, ge=0, description="Stop when the data residual improves less than this, relative")
    keep_snapshots: bool = Field(False, description="Store the contrast after every iteration")

    class Config:
        frozen = True


class IterationRecord(BaseModel):
    """One row of an inversion trace."""
    iteration: int = Field(..., ge=1)
    data_residual: float = Field(..., description="||measured - predicted|| / ||measured||")
    objective: float = Field(..., description="Objective value after the iteration")
    chi_snapshot: Optional[np.ndarray] = Field(None, description="Contrast after the iteration")

    class Config:
        arbitrary_types_allowed = True

    @validator("chi_snapshot")
    def validate_snapshot(cls, v):
        if v is None:
            return v
        snapshot = np.array(v, dtype=np.complex128)
        snapshot.setflags(write=False)
        return snapshot


class InversionTrace(BaseModel):
    """Per-iteration record of an inversion run."""
    method: str = Field(..., description="Solver that produced the trace")
    initial_residual: Optional[float] = Field(None, description="Data residual of the starting contrast")
    records: List[IterationRecord] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list, description="Numerical events worth reporting")

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def data_residuals(self) -> List[float]:
        return [r.data_residual for r in self.records]

    @property
    def objectives(self) -> List[float]:
        return [r.objective for r in self.records]

    @property
    def final_residual(self) -> Optional[float]:
        return self.records[-1].data_residual if self.records else self.initial_residual
