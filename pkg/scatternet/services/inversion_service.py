"""
Classical nonlinear inversion.

Proximal distorted-Born iteration (Gauss-Newton step by matrix-free CG on the
normal equations, followed by soft thresholding in a sparsifying basis) and
contrast source inversion.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import pywt
from scipy.sparse.linalg import LinearOperator, cg

from scatternet.exceptions import (
    InversionError,
    NonConvergenceError,
    ValidationError,
)
from scatternet.models.fields import FieldSet, Operators
from scatternet.models.geometry import ContrastMap, Grid
from scatternet.models.inversion import InversionConfig, InversionTrace, IterationRecord
from scatternet.services.backprop_service import (
    backpropagate,
    backpropagate_sources,
    contrast_from_sources,
)
from scatternet.services.forward_service import FieldSolver, simulate_fields

logger = logging.getLogger(__name__)

CSI_MAX_HALVINGS = 20
NORMALIZER_FLOOR = 1e-12


def soft_threshold(z, tau: float):
    """
    Complex magnitude shrinkage z * max(|z| - tau, 0) / |z|, phase preserved.

    Works element-wise on scalars and arrays; z = 0 maps to 0.
    """
    if tau < 0:
        raise ValidationError(f"Threshold must be non-negative, got {tau}")
    values = np.asarray(z, dtype=np.complex128)
    magnitude = np.abs(values)
    shrink = np.divide(
        np.maximum(magnitude - tau, 0.0),
        magnitude,
        out=np.zeros_like(magnitude),
        where=magnitude > 0,
    )
    result = values * shrink
    return complex(result) if result.ndim == 0 else result


class SparseTransform:
    """Orthonormal sparsifying transform D on row-major contrast vectors."""

    def __init__(self, kind: str, grid: Grid):
        self.kind = kind
        self.shape = grid.shape
        self.level = 0
        self._slices = None

        if kind == "identity":
            return
        if kind != "haar":
            raise ValidationError(f"Unknown transform {kind!r}")

        ny, nx = self.shape
        level = 0
        while ny % 2 == 0 and nx % 2 == 0 and ny > 1 and nx > 1:
            ny, nx = ny // 2, nx // 2
            level += 1
        if level == 0:
            raise ValidationError(f"Haar transform needs even grid dimensions, got {self.shape}")
        self.level = level
        _, self._slices = pywt.coeffs_to_array(
            pywt.wavedec2(np.zeros(self.shape), "haar", mode="periodization", level=level)
        )

    def _forward_real(self, image: np.ndarray) -> np.ndarray:
        coeffs = pywt.wavedec2(image, "haar", mode="periodization", level=self.level)
        array, _ = pywt.coeffs_to_array(coeffs)
        return array

    def _adjoint_real(self, array: np.ndarray) -> np.ndarray:
        coeffs = pywt.array_to_coeffs(array, self._slices, output_format="wavedec2")
        return pywt.waverec2(coeffs, "haar", mode="periodization")

    def forward(self, chi: np.ndarray) -> np.ndarray:
        """D chi."""
        if self.kind == "identity":
            return np.array(chi, dtype=np.complex128)
        image = np.asarray(chi, dtype=np.complex128).reshape(self.shape)
        out = self._forward_real(image.real) + 1j * self._forward_real(image.imag)
        return out.ravel()

    def adjoint(self, coefficients: np.ndarray) -> np.ndarray:
        """D^H c (= D^-1 c)."""
        if self.kind == "identity":
            return np.array(coefficients, dtype=np.complex128)
        array = np.asarray(coefficients, dtype=np.complex128).reshape(self.shape)
        out = self._adjoint_real(array.real) + 1j * self._adjoint_real(array.imag)
        return out.ravel()


def _contrast_vector(ops: Operators, chi) -> np.ndarray:
    values = chi.chi if isinstance(chi, ContrastMap) else np.asarray(chi, dtype=np.complex128).ravel()
    if values.size != ops.n_pixels:
        raise ValidationError(f"Contrast has {values.size} entries, operators expect {ops.n_pixels}")
    return values


def _measurement_matrix(ops: Operators, measurements: np.ndarray) -> np.ndarray:
    data = np.asarray(measurements, dtype=np.complex128)
    if data.shape != (ops.n_tx, ops.n_rx):
        raise ValidationError(f"Measurements have shape {data.shape}, expected {(ops.n_tx, ops.n_rx)}")
    return data


def jacobian_apply(
    ops: Operators,
    chi,
    fieldset: FieldSet,
    dchi: np.ndarray,
    solver: Optional[FieldSolver] = None,
) -> np.ndarray:
    """
    J dchi for every transmitter, shape (N, M).

    J_n = Gd (diag(e_n) + diag(chi) (I - Gs diag(chi))^-1 Gs diag(e_n)); the
    inverse is applied through FieldSolver.
    """
    chi_values = _contrast_vector(ops, chi)
    dchi = np.asarray(dchi, dtype=np.complex128).ravel()
    if dchi.size != ops.n_pixels:
        raise ValidationError(f"Perturbation has {dchi.size} entries, expected {ops.n_pixels}")

    sources = fieldset.e_tot * dchi[None, :]
    if not np.any(chi_values) or not np.any(sources):
        return sources @ ops.gd.T

    solver = solver or FieldSolver(ops, chi_values)
    secondary = solver.solve_many(sources @ ops.gs.T)
    return (sources + chi_values[None, :] * secondary) @ ops.gd.T


def jacobian_adjoint_apply(
    ops: Operators,
    chi,
    fieldset: FieldSet,
    residual: np.ndarray,
    solver: Optional[FieldSolver] = None,
) -> np.ndarray:
    """Sum over transmitters of J_n^H residual_n, length P."""
    chi_values = _contrast_vector(ops, chi)
    residual = _measurement_matrix(ops, residual)

    back = residual @ np.conj(ops.gd)
    if np.any(chi_values) and np.any(back):
        solver = solver or FieldSolver(ops, chi_values)
        adjoint_states = solver.solve_many(np.conj(chi_values)[None, :] * back, adjoint=True)
        back = back + adjoint_states @ np.conj(ops.gs)
    return np.sum(np.conj(fieldset.e_tot) * back, axis=0)


def _solve_state(ops: Operators, chi: np.ndarray) -> Tuple[FieldSolver, FieldSet]:
    solver = FieldSolver(ops, chi)
    fields = simulate_fields(ops, ContrastMap(grid=ops.grid, chi=chi), solver=solver)
    return solver, fields


def _gauss_newton_step(
    ops: Operators,
    chi: np.ndarray,
    fields: FieldSet,
    solver: FieldSolver,
    residual: np.ndarray,
    cfg: InversionConfig,
) -> np.ndarray:
    """CG on (sum_n J_n^H J_n + eps I) s = sum_n J_n^H residual_n."""
    rhs = jacobian_adjoint_apply(ops, chi, fields, residual, solver=solver)
    if not np.any(rhs):
        return np.zeros_like(rhs)

    def normal(s: np.ndarray) -> np.ndarray:
        applied = jacobian_apply(ops, chi, fields, s, solver=solver)
        return jacobian_adjoint_apply(ops, chi, fields, applied, solver=solver) + cfg.tikhonov_eps * s

    n = ops.n_pixels
    operator = LinearOperator((n, n), matvec=normal, dtype=np.complex128)
    step, info = cg(operator, rhs, rtol=cfg.cg_tol, atol=0.0, maxiter=cfg.cg_iters)
    if info > 0:
        logger.debug(f"Normal-equation CG stopped at its cap of {cfg.cg_iters} iterations")
    return step


def dbim_prox_solve(
    ops: Operators,
    measurements: np.ndarray,
    init: Optional[ContrastMap] = None,
    cfg: Optional[InversionConfig] = None,
) -> Tuple[ContrastMap, InversionTrace]:
    """
    Proximal distorted-Born inversion.

    Each outer iteration takes a unit Gauss-Newton step s from the current
    contrast, then sets chi = D^H S(D(chi + s), tau).

    Args:
        ops: Assembled operators
        measurements: (N, M) measured scattered fields
        init: Starting contrast, back-propagation image when omitted
        cfg: Iteration settings

    Returns:
        Tuple of (final contrast, trace)
    """
    cfg = cfg or InversionConfig()
    data = _measurement_matrix(ops, measurements)
    chi = _contrast_vector(ops, init) if init is not None else backpropagate(ops, data).chi
    chi = np.array(chi, dtype=np.complex128)
    transform = SparseTransform(cfg.transform, ops.grid)
    trace = InversionTrace(method="dbim")

    data_norm = float(np.linalg.norm(data)) or 1.0

    try:
        solver, fields = _solve_state(ops, chi)
    except NonConvergenceError as e:
        logger.error(f"Forward solve failed at the initial contrast: {e}")
        raise InversionError(f"Forward solve failed at the initial contrast: {e.message}", trace=trace) from e

    residual = data - fields.e_sca
    previous = float(np.linalg.norm(residual)) / data_norm
    trace.initial_residual = previous
    logger.info(f"DBIM start: data residual {previous:.4e}")

    for iteration in range(1, cfg.max_iters + 1):
        if previous == 0.0:
            break
        try:
            step = _gauss_newton_step(ops, chi, fields, solver, residual, cfg)
            chi = transform.adjoint(soft_threshold(transform.forward(chi + step), cfg.threshold_tau))
            solver, fields = _solve_state(ops, chi)
        except NonConvergenceError as e:
            logger.error(f"Forward solve failed at iteration {iteration}: {e}")
            raise InversionError(f"Forward solve failed at iteration {iteration}: {e.message}", trace=trace) from e

        residual = data - fields.e_sca
        current = float(np.linalg.norm(residual)) / data_norm
        objective = 0.5 * float(np.linalg.norm(residual)) ** 2 + cfg.threshold_tau * float(
            np.sum(np.abs(transform.forward(chi)))
        )
        trace.append(IterationRecord(
            iteration=iteration,
            data_residual=current,
            objective=objective,
            chi_snapshot=chi.copy() if cfg.keep_snapshots else None,
        ))
        logger.info(f"DBIM iteration {iteration}: data residual {current:.4e}, objective {objective:.4e}")

        if previous - current < cfg.improvement_floor * previous:
            logger.info(f"DBIM stopped after {iteration} iterations: improvement below {cfg.improvement_floor:g}")
            break
        previous = current

    return ContrastMap(grid=ops.grid, chi=chi), trace


class _CsiState:
    """Contrast sources, contrast and the products CSI reuses."""

    def __init__(self, ops: Operators, data: np.ndarray, sources: np.ndarray, chi: np.ndarray):
        self.ops = ops
        self.data = data
        self.sources = sources
        self.chi = chi
        self.refresh_sources()

    def refresh_sources(self) -> None:
        self.gd_w = self.sources @ self.ops.gd.T
        self.gs_w = self.sources @ self.ops.gs.T

    @property
    def data_error(self) -> np.ndarray:
        return self.data - self.gd_w

    def state_error(self, chi: np.ndarray) -> np.ndarray:
        return chi[None, :] * (self.ops.e_inc + self.gs_w) - self.sources

    def state_weight(self, chi: np.ndarray) -> Tuple[float, bool]:
        """eta_D = 1 / sum ||chi e_inc||^2, regularized when that vanishes."""
        norm = float(np.sum(np.abs(chi[None, :] * self.ops.e_inc) ** 2))
        if norm > 0:
            return 1.0 / norm, False
        floor = NORMALIZER_FLOOR * float(np.sum(np.abs(self.ops.e_inc) ** 2)) or NORMALIZER_FLOOR
        return 1.0 / floor, True

    def cost(self, data_weight: float, chi: np.ndarray) -> float:
        state_weight, _ = self.state_weight(chi)
        return (
            data_weight * float(np.sum(np.abs(self.data_error) ** 2))
            + state_weight * float(np.sum(np.abs(self.state_error(chi)) ** 2))
        )


def csi_solve(
    ops: Operators,
    measurements: np.ndarray,
    cfg: Optional[InversionConfig] = None,
    init_chi: Optional[ContrastMap] = None,
    init_sources: Optional[np.ndarray] = None,
) -> Tuple[ContrastMap, InversionTrace]:
    """
    Contrast source inversion.

    Per iteration: one Polak-Ribiere CG step on the contrast sources with an
    exact line minimization, then a least-squares contrast update that is
    halved towards the current contrast until the cost does not increase.
    The trace holds one row per iteration with the cost F.

    Args:
        ops: Assembled operators
        measurements: (N, M) measured scattered fields
        cfg: Iteration settings; only max_iters and keep_snapshots apply
        init_chi: Starting contrast, derived from the sources when omitted
        init_sources: Starting (N, P) sources, back-propagated when omitted

    Returns:
        Tuple of (final contrast, trace)
    """
    cfg = cfg or InversionConfig()
    data = _measurement_matrix(ops, measurements)
    trace = InversionTrace(method="csi")

    if init_sources is None:
        sources = backpropagate_sources(ops, data)
    else:
        sources = np.array(init_sources, dtype=np.complex128)
        if sources.shape != (ops.n_tx, ops.n_pixels):
            raise ValidationError(f"Initial sources have shape {sources.shape}, expected {(ops.n_tx, ops.n_pixels)}")
    chi = (
        np.array(_contrast_vector(ops, init_chi), dtype=np.complex128)
        if init_chi is not None
        else contrast_from_sources(ops, sources)
    )

    data_energy = float(np.sum(np.abs(data) ** 2))
    data_weight = 1.0 / data_energy if data_energy > 0 else 1.0
    data_norm = np.sqrt(data_energy) or 1.0

    state = _CsiState(ops, data, sources, chi)
    cost = state.cost(data_weight, chi)
    trace.initial_residual = float(np.linalg.norm(state.data_error)) / data_norm
    logger.info(f"CSI start: F={cost:.4e}")

    gradient_prev = None
    direction = None
    gd_conj = np.conj(ops.gd)
    gs_conj = np.conj(ops.gs)

    for iteration in range(1, cfg.max_iters + 1):
        state_weight, regularized = state.state_weight(state.chi)
        if regularized:
            trace.flags.append(f"normalizer_regularized@{iteration - 1}")
            logger.warning(f"CSI state normalizer vanished at iteration {iteration - 1}; regularized")

        rho = state.data_error
        r = state.state_error(state.chi)
        gradient = -data_weight * (rho @ gd_conj) - state_weight * (
            r - (np.conj(state.chi)[None, :] * r) @ gs_conj
        )

        if direction is None:
            direction = gradient
        else:
            previous_energy = float(np.sum(np.abs(gradient_prev) ** 2))
            beta = (
                float(np.real(np.sum(gradient * np.conj(gradient - gradient_prev)))) / previous_energy
                if previous_energy > 0 else 0.0
            )
            direction = gradient + beta * direction
        gradient_prev = gradient

        gd_v = direction @ ops.gd.T
        state_v = direction - state.chi[None, :] * (direction @ ops.gs.T)
        curvature = data_weight * float(np.sum(np.abs(gd_v) ** 2)) + state_weight * float(np.sum(np.abs(state_v) ** 2))
        alpha = -float(np.real(np.sum(gradient * np.conj(direction)))) / curvature if curvature > 0 else 0.0

        previous_sources = state.sources
        state.sources = state.sources + alpha * direction
        state.refresh_sources()
        source_cost = state.cost(data_weight, state.chi)
        if source_cost > cost:
            state.sources = previous_sources
            state.refresh_sources()
            source_cost = cost

        target = contrast_from_sources(ops, state.sources)
        accepted = None
        t = 1.0
        for _ in range(CSI_MAX_HALVINGS + 1):
            candidate = state.chi + t * (target - state.chi)
            candidate_cost = state.cost(data_weight, candidate)
            if candidate_cost <= source_cost:
                accepted = (candidate, candidate_cost)
                break
            t *= 0.5
        if accepted is None:
            logger.debug(f"CSI iteration {iteration}: contrast update rejected")
            cost = source_cost
        else:
            state.chi, cost = accepted

        data_residual = float(np.linalg.norm(state.data_error)) / data_norm
        trace.append(IterationRecord(
            iteration=iteration,
            data_residual=data_residual,
            objective=cost,
            chi_snapshot=state.chi.copy() if cfg.keep_snapshots else None,
        ))
        logger.debug(f"CSI iteration {iteration}: F={cost:.6e}, data residual {data_residual:.4e}")

    logger.info(f"CSI finished {cfg.max_iters} iterations: F={cost:.4e}")
    return ContrastMap(grid=ops.grid, chi=state.chi), trace
