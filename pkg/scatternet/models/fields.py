"""
Pydantic models for discretized Green's operators and solved field sets.
"""
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, validator

from scatternet.models.geometry import Grid, MeasurementSetup
from scatternet.settings import get_settings


def _default_method() -> str:
    method = get_settings().solver_method
    return method if method in ("krylov", "dense") else "krylov"


class SolverSettings(BaseModel):
    """Linear-solver policy for (I - Gs diag(chi)) systems."""
    method: Literal["krylov", "dense"] = Field(default_factory=_default_method, description="Primary solve method")
    tol: float = Field(1e-10, gt=0, description="Relative residual target")
    max_iter_factor: int = Field(10, ge=1, description="Krylov iteration cap as a multiple of P")
    dense_limit: int = Field(default_factory=lambda: get_settings().dense_limit, ge=0,
                             description="Largest P for which the dense LU fallback is allowed")

    class Config:
        frozen = True


class Operators(BaseModel):
    """Assembled Green's operators for one grid/setup pair."""
    gd: np.ndarray = Field(..., description="M x P map from contrast sources to receiver fields")
    gs: np.ndarray = Field(..., description="P x P map from contrast sources to fields inside the domain")
    e_inc: np.ndarray = Field(..., description="N x P incident fields on the pixel centers")
    grid: Grid
    setup: MeasurementSetup
    incidence: Literal["line", "plane"] = Field("line", description="Transmitter model")
    solver: SolverSettings = Field(default_factory=SolverSettings)

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @validator("gd", "gs", "e_inc")
    def validate_matrix(cls, v):
        """Freeze operator matrices after assembly."""
        v = np.asarray(v, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError("Operator arrays must be two-dimensional")
        v.setflags(write=False)
        return v

    @property
    def n_pixels(self) -> int:
        return self.gs.shape[0]

    @property
    def n_tx(self) -> int:
        return self.e_inc.shape[0]

    @property
    def n_rx(self) -> int:
        return self.gd.shape[0]

    def with_solver(self, solver: SolverSettings) -> "Operators":
        """Same operators, different solver policy."""
        return self.model_copy(update={"solver": solver})


class FieldSet(BaseModel):
    """Incident, total and scattered fields for every transmitter."""
    e_inc: np.ndarray = Field(..., description="N x P incident fields")
    e_tot: np.ndarray = Field(..., description="N x P total fields")
    e_sca: np.ndarray = Field(..., description="N x M scattered fields at the receivers")

    class Config:
        arbitrary_types_allowed = True

    def residual(self, gs: np.ndarray, chi: np.ndarray) -> float:
        """Relative residual of e_tot - e_inc = Gs (chi * e_tot), worst transmitter."""
        lhs = self.e_tot - self.e_inc
        rhs = (chi[None, :] * self.e_tot) @ gs.T
        norms = np.linalg.norm(self.e_inc, axis=1)
        norms[norms == 0] = 1.0
        return float(np.max(np.linalg.norm(lhs - rhs, axis=1) / norms))
