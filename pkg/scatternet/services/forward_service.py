"""
Discretized 2D TM forward scattering.

Richmond equal-area-disk method of moments for the coupled data and state
equations, a reusable linear solver for (I - Gs diag(chi)), noise injection
and the cylindrical-harmonic series for a dielectric cylinder.
"""
import logging
import threading
from typing import Literal, Optional

import numpy as np
from scipy import special
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, bicgstab
from scipy.spatial.distance import cdist

from scatternet.exceptions import (
    GeometryError,
    NonConvergenceError,
    SeriesConvergenceError,
    ValidationError,
)
from scatternet.models.fields import FieldSet, Operators, SolverSettings
from scatternet.models.geometry import ContrastMap, Grid, MeasurementSetup
from scatternet.services.geometry_service import check_pairing, refine_contrast, refine_grid
from scatternet.services.specfun import bessel_cyl, hankel1
from scatternet.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

Incidence = Literal["line", "plane"]

SERIES_TAIL_TOLERANCE = 1e-10


def equivalent_radius(grid: Grid) -> float:
    """Radius of the disk with the same area as one cell."""
    return grid.cell_size / np.sqrt(np.pi)


def assemble(
    grid: Grid,
    setup: MeasurementSetup,
    incidence: Incidence = "line",
    solver: Optional[SolverSettings] = None,
) -> Operators:
    """
    Assemble Gd, Gs and the incident fields for a grid/setup pair.

    Args:
        grid: Investigation domain
        setup: Antenna ring, every antenna outside the domain
        incidence: "line" for unit line sources, "plane" for plane waves
        solver: Linear-solver policy carried by the operators

    Returns:
        Operators: Read-only operator bundle
    """
    check_pairing(grid, setup)

    k0 = grid.k0
    a = equivalent_radius(grid)
    c = 0.5j * np.pi * k0 * a
    coupling = c * bessel_cyl("J", 1, k0 * a)

    centers = grid.centers()
    n_pixels = grid.n_pixels

    distances = cdist(centers, centers)
    off_diagonal = ~np.eye(n_pixels, dtype=bool)
    gs = np.empty((n_pixels, n_pixels), dtype=np.complex128)
    gs[off_diagonal] = coupling * hankel1(0, k0 * distances[off_diagonal])
    np.fill_diagonal(gs, c * hankel1(1, k0 * a) - 1.0)

    rx_distances = cdist(setup.rx_array(), centers)
    if np.any(rx_distances <= 0):
        raise GeometryError("A receiver coincides with a pixel center")
    gd = coupling * hankel1(0, k0 * rx_distances)

    e_inc = incident_fields(grid, setup, incidence)

    ops = Operators(
        gd=gd,
        gs=gs,
        e_inc=e_inc,
        grid=grid,
        setup=setup,
        incidence=incidence,
        solver=solver or SolverSettings(),
    )
    logger.info(f"Assembled operators: P={n_pixels}, N={setup.n_tx}, M={setup.n_rx}, incidence={incidence}")
    return ops


def incident_fields(grid: Grid, setup: MeasurementSetup, incidence: Incidence = "line") -> np.ndarray:
    """
    Incident field of every transmitter on the pixel centers, shape (N, P).

    Line sources radiate (i/4) H0(k0 |r - r_tx|). Plane waves are
    exp(i k0 d.r) with d pointing from the transmitter to the grid center.
    """
    centers = grid.centers()
    tx = setup.tx_array()

    if incidence == "line":
        distances = cdist(tx, centers)
        if np.any(distances <= 0):
            raise GeometryError("A transmitter coincides with a pixel center")
        return 0.25j * hankel1(0, grid.k0 * distances)

    if incidence == "plane":
        directions = np.asarray(grid.center)[None, :] - tx
        lengths = np.linalg.norm(directions, axis=1, keepdims=True)
        if np.any(lengths == 0):
            raise GeometryError("A transmitter sits on the grid center; plane-wave direction undefined")
        directions = directions / lengths
        return np.exp(1j * grid.k0 * (directions @ centers.T))

    raise ValidationError(f"Unknown incidence {incidence!r}")


class FieldSolver:
    """
    Solves (I - Gs diag(chi)) x = b and its conjugate transpose.

    One instance per contrast. The dense path factorizes once and reuses the
    factors for every right-hand side; the Krylov path runs BiCGSTAB per
    right-hand side and falls back to the dense path when P <= dense_limit.
    """

    def __init__(self, ops: Operators, chi: np.ndarray):
        self.ops = ops
        self.chi = np.asarray(chi, dtype=np.complex128).ravel()
        if self.chi.size != ops.n_pixels:
            raise ValidationError(f"Contrast has {self.chi.size} entries, operators expect {ops.n_pixels}")
        self.settings = ops.solver
        self.trivial = not np.any(self.chi)
        self._lu = None
        self._gs_conj = None
        self._lock = threading.Lock()

        if not self.trivial and self.settings.method == "dense":
            self._factorize()

    @property
    def n_pixels(self) -> int:
        return self.ops.n_pixels

    def _apply(self, x: np.ndarray) -> np.ndarray:
        return x - self.ops.gs @ (self.chi * x)

    def _apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        return x - np.conj(self.chi) * (self._conj_gs() @ x)

    def _conj_gs(self) -> np.ndarray:
        if self._gs_conj is None:
            with self._lock:
                if self._gs_conj is None:
                    self._gs_conj = np.conj(self.ops.gs)
        return self._gs_conj

    def _factorize(self):
        with self._lock:
            if self._lu is None:
                matrix = np.eye(self.n_pixels, dtype=np.complex128) - self.ops.gs * self.chi[None, :]
                self._lu = lu_factor(matrix, check_finite=False)
                logger.debug(f"LU factorization of {self.n_pixels}x{self.n_pixels} system")
        return self._lu

    def _residual(self, x: np.ndarray, b: np.ndarray, adjoint: bool) -> float:
        applied = self._apply_adjoint(x) if adjoint else self._apply(x)
        return float(np.linalg.norm(applied - b) / np.linalg.norm(b))

    def _dense(self, b: np.ndarray, adjoint: bool) -> np.ndarray:
        lu = self._factorize()
        trans = 2 if adjoint else 0
        x = lu_solve(lu, b, trans=trans, check_finite=False)
        residual = self._residual(x, b, adjoint)
        if residual > self.settings.tol:
            # one step of iterative refinement
            correction_rhs = b - (self._apply_adjoint(x) if adjoint else self._apply(x))
            x = x + lu_solve(lu, correction_rhs, trans=trans, check_finite=False)
        return x

    def _krylov(self, b: np.ndarray, adjoint: bool) -> np.ndarray:
        n = self.n_pixels
        operator = LinearOperator(
            (n, n),
            matvec=self._apply_adjoint if adjoint else self._apply,
            dtype=np.complex128,
        )
        maxiter = self.settings.max_iter_factor * n
        x, info = bicgstab(operator, b, x0=b.copy(), rtol=self.settings.tol, atol=0.0, maxiter=maxiter)
        if info < 0:
            logger.debug(f"BiCGSTAB breakdown (info={info})")
        return x

    def _solve(self, b: np.ndarray, adjoint: bool, transmitter: Optional[int]) -> np.ndarray:
        b = np.asarray(b, dtype=np.complex128).ravel()
        if b.size != self.n_pixels:
            raise ValidationError(f"Right-hand side has {b.size} entries, expected {self.n_pixels}")
        if self.trivial:
            return b.copy()
        if not np.any(b):
            return np.zeros_like(b)

        if self.settings.method == "dense":
            x = self._dense(b, adjoint)
        else:
            x = self._krylov(b, adjoint)
            residual = self._residual(x, b, adjoint)
            if residual > self.settings.tol:
                if self.n_pixels > self.settings.dense_limit:
                    raise NonConvergenceError(
                        f"BiCGSTAB stopped at relative residual {residual:.3e}",
                        residual=residual,
                        transmitter=transmitter,
                    )
                logger.warning(
                    f"BiCGSTAB residual {residual:.3e} above {self.settings.tol:.1e}; "
                    f"falling back to dense LU (P={self.n_pixels})"
                )
                x = self._dense(b, adjoint)

        residual = self._residual(x, b, adjoint)
        if residual > self.settings.tol:
            raise NonConvergenceError(
                f"Linear solve missed tolerance {self.settings.tol:.1e}",
                residual=residual,
                transmitter=transmitter,
            )
        return x

    def solve(self, b: np.ndarray, transmitter: Optional[int] = None) -> np.ndarray:
        """Solve (I - Gs diag(chi)) x = b."""
        return self._solve(b, adjoint=False, transmitter=transmitter)

    def solve_adjoint(self, b: np.ndarray, transmitter: Optional[int] = None) -> np.ndarray:
        """Solve (I - diag(conj chi) Gs^H) x = b."""
        return self._solve(b, adjoint=True, transmitter=transmitter)

    def solve_many(self, rows: np.ndarray, adjoint: bool = False, threads: Optional[int] = None) -> np.ndarray:
        """
        Solve for every row of an (N, P) right-hand-side block.

        Rows are independent; results are identical for any thread count.
        """
        rows = np.atleast_2d(np.asarray(rows, dtype=np.complex128))
        if self.trivial:
            return rows.copy()

        def run(index: int) -> np.ndarray:
            if adjoint:
                return self.solve_adjoint(rows[index], transmitter=index)
            return self.solve(rows[index], transmitter=index)

        return np.vstack(ordered_map(run, range(rows.shape[0]), threads=threads))


def solve_total_field(ops: Operators, chi: ContrastMap, e_inc: np.ndarray) -> np.ndarray:
    """
    Total field inside the domain for one incident field.

    Args:
        ops: Assembled operators
        chi: Contrast on the same grid
        e_inc: Incident field, length P

    Returns:
        np.ndarray: e_tot with (I - Gs diag(chi)) e_tot = e_inc
    """
    _check_contrast(ops, chi)
    return FieldSolver(ops, chi.chi).solve(e_inc)


def scattered_field(ops: Operators, chi: ContrastMap, e_tot: np.ndarray) -> np.ndarray:
    """Gd (chi * e_tot), length M."""
    e_tot = np.asarray(e_tot, dtype=np.complex128)
    if e_tot.shape[-1] != ops.n_pixels:
        raise ValidationError(f"Field has {e_tot.shape[-1]} entries, expected {ops.n_pixels}")
    return ops.gd @ (chi.chi * e_tot)


def simulate_fields(
    ops: Operators,
    chi: ContrastMap,
    threads: Optional[int] = None,
    solver: Optional[FieldSolver] = None,
) -> FieldSet:
    """Incident, total and scattered fields for every transmitter."""
    _check_contrast(ops, chi)
    solver = solver or FieldSolver(ops, chi.chi)
    e_tot = solver.solve_many(ops.e_inc, threads=threads)
    e_sca = (chi.chi[None, :] * e_tot) @ ops.gd.T
    return FieldSet(e_inc=np.array(ops.e_inc), e_tot=e_tot, e_sca=e_sca)


def subcell_contrast(grid: Grid, chi: ContrastMap, oversample: int) -> ContrastMap:
    """
    Contrast on refine_grid(grid, oversample) for a sub-cell forward solve.

    A contrast on grid is copied onto its sub-cells. A contrast already on
    the refined grid carries sub-pixel boundaries and is used unchanged.
    """
    if oversample < 1:
        raise ValidationError(f"oversample must be at least 1, got {oversample}")
    fine = refine_grid(grid, oversample)
    if chi.grid == fine:
        return chi
    if chi.grid == grid:
        return refine_contrast(chi, oversample)
    raise ValidationError(f"Contrast grid is neither the {grid.ny}x{grid.nx} grid nor its {oversample}x refinement")


def simulate(
    grid: Grid,
    setup: MeasurementSetup,
    chi: ContrastMap,
    incidence: Incidence = "line",
    solver: Optional[SolverSettings] = None,
    oversample: int = 1,
) -> np.ndarray:
    """
    Full forward pipeline: assemble, solve every transmitter, measure.

    With oversample = s every pixel is discretized as s x s sub-cells. A
    contrast rasterized on the refined grid keeps its sub-pixel boundary in
    the solve; a pixel contrast only gains the finer quadrature.

    Args:
        grid: Pixel grid of the contrast
        setup: Antenna ring
        chi: Contrast on grid, or on refine_grid(grid, oversample)
        incidence: Transmitter model
        solver: Linear-solver policy
        oversample: Sub-cells per pixel side

    Returns:
        np.ndarray: (N, M) scattered fields, row n for transmitter n
    """
    target = subcell_contrast(grid, chi, oversample)
    ops = assemble(target.grid, setup, incidence=incidence, solver=solver)
    return simulate_fields(ops, target).e_sca


def add_noise(measurements: np.ndarray, snr_db: float, seed: int, stream: int = 0) -> np.ndarray:
    """
    Add circular complex Gaussian noise at a given aggregate SNR.

    Noise power is mean(|S|^2) * 10^(-snr_db/10) over the whole matrix. The
    generator is Philox keyed on (seed, stream), so every stream is
    reproducible on its own.

    Args:
        measurements: Noiseless data
        snr_db: Signal-to-noise ratio in dB, or +inf for no noise
        seed: Base seed (non-negative)
        stream: Independent stream index, e.g. the sample index

    Returns:
        np.ndarray: Noisy copy
    """
    data = np.array(measurements, dtype=np.complex128)
    if np.isnan(snr_db) or snr_db == -np.inf:
        raise ValidationError(f"SNR must be finite or +inf, got {snr_db}")
    if snr_db == np.inf:
        return data
    if seed < 0 or stream < 0:
        raise ValidationError("Noise seed and stream must be non-negative")

    signal_power = float(np.mean(np.abs(data) ** 2)) if data.size else 0.0
    if signal_power == 0.0:
        return data

    sigma2 = signal_power * 10.0 ** (-snr_db / 10.0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))
    scale = np.sqrt(sigma2 / 2.0)
    noise = scale * (rng.standard_normal(data.shape) + 1j * rng.standard_normal(data.shape))
    return data + noise


def analytic_cylinder(
    radius: float,
    eps_r: float,
    grid: Grid,
    setup: MeasurementSetup,
    n_terms: int = 40,
    incidence: Incidence = "line",
) -> np.ndarray:
    """
    Scattered field of a homogeneous dielectric cylinder centered on the grid.

    Cylindrical-harmonic series truncated at |n| <= n_terms; the two
    outermost terms must be below 1e-10 of the largest field value.

    Args:
        radius: Cylinder radius in meters
        eps_r: Relative permittivity of the cylinder
        grid: Grid whose center is the cylinder axis
        setup: Antenna ring
        n_terms: Highest harmonic order kept
        incidence: Same transmitter model as incident_fields

    Returns:
        np.ndarray: (N, M) scattered fields
    """
    if radius <= 0:
        raise ValidationError(f"Cylinder radius must be positive, got {radius}")
    if eps_r <= 0:
        raise ValidationError(f"Relative permittivity must be positive, got {eps_r}")
    if n_terms < 1:
        raise ValidationError(f"n_terms must be at least 1, got {n_terms}")

    center = np.asarray(grid.center)
    tx = setup.tx_array() - center
    rx = setup.rx_array() - center
    rho_s, phi_s = np.hypot(tx[:, 0], tx[:, 1]), np.arctan2(tx[:, 1], tx[:, 0])
    rho_r, phi_r = np.hypot(rx[:, 0], rx[:, 1]), np.arctan2(rx[:, 1], rx[:, 0])
    if np.any(rho_r <= radius) or (incidence == "line" and np.any(rho_s <= radius)):
        raise GeometryError("Antennas must lie outside the cylinder")

    if eps_r == 1.0:
        return np.zeros((setup.n_tx, setup.n_rx), dtype=np.complex128)

    k0 = grid.k0
    k1 = k0 * np.sqrt(eps_r)
    orders = np.arange(-n_terms, n_terms + 1)
    x0, x1 = k0 * radius, k1 * radius

    numerator = k1 * special.jvp(orders, x1) * special.jv(orders, x0) - k0 * special.jv(orders, x1) * special.jvp(orders, x0)
    denominator = k0 * special.jv(orders, x1) * special.h1vp(orders, x0) - k1 * special.jvp(orders, x1) * special.hankel1(orders, x0)
    with np.errstate(divide="ignore", invalid="ignore"):
        coefficients = numerator / denominator
    underflow = special.jv(orders, x0) == 0
    coefficients = np.where(~np.isfinite(coefficients) & underflow, 0.0, coefficients)
    if not np.all(np.isfinite(coefficients)):
        raise SeriesConvergenceError(f"Non-finite series coefficient for n_terms={n_terms}")

    outgoing_rx = special.hankel1(orders[:, None], k0 * rho_r[None, :])  # (K, M)
    angle = orders[:, None, None] * (phi_r[None, None, :] - phi_s[None, :, None])  # (K, N, M)

    if incidence == "line":
        outgoing_tx = special.hankel1(orders[:, None], k0 * rho_s[None, :])  # (K, N)
        terms = 0.25j * coefficients[:, None, None] * outgoing_tx[:, :, None] * outgoing_rx[:, None, :] * np.exp(1j * angle)
    elif incidence == "plane":
        # travel direction is phi_s + pi; exp(i k0 d.c) moves the phase reference to the origin
        direction = phi_s + np.pi
        angle = orders[:, None, None] * (phi_r[None, None, :] - direction[None, :, None])
        d = np.column_stack([np.cos(direction), np.sin(direction)])
        phase = np.exp(1j * k0 * (d @ center))
        terms = (
            (1j ** orders)[:, None, None] * coefficients[:, None, None]
            * outgoing_rx[:, None, :] * np.exp(1j * angle) * phase[None, :, None]
        )
    else:
        raise ValidationError(f"Unknown incidence {incidence!r}")

    if not np.all(np.isfinite(terms)):
        raise SeriesConvergenceError(f"Non-finite series term for n_terms={n_terms}")

    field = terms.sum(axis=0)
    tail = float(np.max(np.abs(terms[0]) + np.abs(terms[-1])))
    scale = float(np.max(np.abs(field)))
    if tail > SERIES_TAIL_TOLERANCE * max(scale, np.finfo(float).tiny):
        raise SeriesConvergenceError(
            f"Series tail {tail:.3e} exceeds {SERIES_TAIL_TOLERANCE:.0e} of field scale {scale:.3e}; raise n_terms"
        )
    return field


def _check_contrast(ops: Operators, chi: ContrastMap) -> None:
    if chi.grid != ops.grid:
        raise ValidationError("Contrast grid does not match the operators' grid")
