import logging
from typing import List

import numpy as np
import scipy.linalg

from homogen.config.settings import settings
from homogen.models.cell import CellField, CellOperator, SSampleSet, TorusGrid
from homogen.models.coefficient import CoefficientSpec, TrigFactor
from homogen.models.kernel import KernelSpec, PeriodizedKernel
from homogen.services.kernel_service import fold_index, periodized_moment_kernel
from homogen.utils.errors import (
    CoercivityViolation,
    CompatibilityViolation,
    NonPositiveDensity,
    NullSpaceDimension,
    SolverBreakdown,
    ValidationFailure,
)
from homogen.utils.spectral import spectral_derivative

logger = logging.getLogger(__name__)

DENSITY_RESIDUAL_TOL = 1e-10

KIND_BY_NDIM = {1: "scalar", 2: "vector", 3: "matrix"}


def factor_values(factor: TrigFactor, x: np.ndarray, dimension: int) -> np.ndarray:
    """Evaluate a trig factor at points x of shape (n, d)."""
    x = np.atleast_2d(x)
    if factor.kind == "one":
        return np.ones(x.shape[0])
    phase = 2.0 * np.pi * (x @ np.asarray(factor.harmonic_vector(dimension), dtype=float))
    return np.sin(phase) if factor.kind == "sin" else np.cos(phase)


def time_values(factor: TrigFactor, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if factor.kind == "one":
        return np.ones_like(s)
    phase = 2.0 * np.pi * factor.harmonic * s
    return np.sin(phase) if factor.kind == "sin" else np.cos(phase)


def mu_matrix(mu: CoefficientSpec, xi: np.ndarray, eta: np.ndarray, s: float) -> np.ndarray:
    """mu(xi_i, eta_j, s) for every pair of points; shape (len(xi), len(eta))."""
    values = np.full((np.atleast_2d(xi).shape[0], np.atleast_2d(eta).shape[0]), mu.constant)
    for term in mu.terms:
        amplitude = term.coefficient * float(time_values(term.s, s))
        if amplitude == 0.0:
            continue
        values += amplitude * np.outer(factor_values(term.xi, xi, mu.dimension),
                                       factor_values(term.eta, eta, mu.dimension))
    return values


def check_coercivity(mu: CoefficientSpec) -> None:
    if mu.mu_minus <= 0:
        logger.error(f"Coefficient lower bound mu_- = {mu.mu_minus} is not positive")
        raise CoercivityViolation(f"mu_- = {mu.mu_minus} <= 0")


def difference_index(grid: TorusGrid) -> np.ndarray:
    """Torus index of xi_i - xi_j for every node pair."""
    idx = grid.multi_index
    diffs = idx[:, None, :] - idx[None, :, :]
    return fold_index(diffs.reshape(-1, grid.dimension), grid.n).reshape(grid.size, grid.size)


def kernel_weight_matrix(grid: TorusGrid, pk: PeriodizedKernel, mu: CoefficientSpec, s: float) -> np.ndarray:
    """K_q[i, j] = N^-d a_q(xi_i - xi_j) mu(xi_i, xi_j, s); trailing moment axes kept."""
    folded = pk.values[difference_index(grid)]
    weights = grid.weight * mu_matrix(mu, grid.nodes, grid.nodes, s)
    return folded * weights.reshape(weights.shape + (1,) * (folded.ndim - 2))


def assemble_generator(grid: TorusGrid, kern: KernelSpec, mu: CoefficientSpec, s: float,
                       adjoint: bool = False, pk: PeriodizedKernel | None = None) -> CellOperator:
    check_coercivity(mu)
    if kern.dimension != grid.dimension or mu.dimension != grid.dimension:
        raise ValidationFailure(f"dimension mismatch: grid d={grid.dimension}, kernel d={kern.dimension}, mu d={mu.dimension}")
    pk = pk or periodized_moment_kernel(kern, grid.n, 0)
    weights = kernel_weight_matrix(grid, pk, mu, s)
    off = weights.copy()
    np.fill_diagonal(off, 0.0)
    exit_rate = off.sum(axis=1)
    if adjoint:
        # entries a_0(xi_j - xi_i) mu(xi_j, xi_i, s), same exit rates on the diagonal
        matrix = grid.weight * pk.values[difference_index(grid).T] * mu_matrix(mu, grid.nodes, grid.nodes, s).T
        np.fill_diagonal(matrix, -exit_rate)
    else:
        matrix = off
        np.fill_diagonal(matrix, -exit_rate)
    logger.debug(f"Assembled {'adjoint' if adjoint else 'generator'} at s={s:.6f}: size {grid.size}, max exit rate {exit_rate.max():.6g}")
    return CellOperator(grid=grid, s=s, adjoint=adjoint, matrix=matrix)


def _check_null_space(matrix: np.ndarray) -> None:
    singular = scipy.linalg.svdvals(matrix)
    small = int(np.sum(singular <= settings.NULL_SPACE_RTOL * singular[0]))
    if small != 1:
        logger.error(f"Numerical null space has dimension {small}")
        raise NullSpaceDimension(f"expected a one-dimensional null space, found {small}")


def _bordered(matrix: np.ndarray, weight: float) -> np.ndarray:
    size = matrix.shape[0]
    bordered = np.zeros((size + 1, size + 1))
    bordered[:size, :size] = matrix
    bordered[:size, size] = 1.0
    bordered[size, :size] = weight
    return bordered


def _factor(bordered: np.ndarray):
    try:
        lu = scipy.linalg.lu_factor(bordered, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SolverBreakdown(f"bordered factorization failed: {e}")
    pivots = np.abs(np.diag(lu[0]))
    if pivots.min() <= np.finfo(float).eps * pivots.max():
        raise NullSpaceDimension("bordered system is singular: null space is not one-dimensional")
    return lu


def invariant_density(adjoint_op: CellOperator, s_index: int | None = None) -> CellField:
    """Positive p with A*(s) p = 0 and discrete mean one."""
    if not adjoint_op.adjoint:
        raise ValidationFailure("invariant_density needs the adjoint operator")
    grid = adjoint_op.grid
    if settings.CHECK_NULL_SPACE:
        _check_null_space(adjoint_op.matrix)
    lu = _factor(_bordered(adjoint_op.matrix, grid.weight))
    rhs = np.zeros(grid.size + 1)
    rhs[-1] = 1.0
    solution = scipy.linalg.lu_solve(lu, rhs)
    p = solution[:-1]
    residual = float(np.linalg.norm(adjoint_op.matrix @ p))
    if residual > DENSITY_RESIDUAL_TOL:
        logger.error(f"Invariant density residual {residual:.3e} at s={adjoint_op.s}")
        raise SolverBreakdown(f"invariant density residual {residual:.3e}")
    if p.min() <= 0:
        logger.error(f"Invariant density not positive at s={adjoint_op.s}: min {p.min():.3e}")
        raise NonPositiveDensity(f"min p = {p.min():.3e}")
    logger.debug(f"Invariant density at s={adjoint_op.s:.6f}: min {p.min():.6g}, max {p.max():.6g}, residual {residual:.2e}")
    return CellField(values=p, kind="scalar", s_index=s_index, residual=residual)


class MeanZeroSolver:
    """Bordered LU of A(s) for repeated solves on the mean-zero complement."""

    def __init__(self, op: CellOperator, tol_compat: float | None = None, tol_solve: float | None = None):
        if op.adjoint:
            raise ValidationFailure("mean-zero solves use the generator, not its adjoint")
        self.op = op
        self.tol_compat = settings.TOL_COMPAT if tol_compat is None else tol_compat
        self.tol_solve = settings.TOL_SOLVE if tol_solve is None else tol_solve
        self._lu = _factor(_bordered(op.matrix, op.grid.weight))

    def solve(self, rhs: np.ndarray | CellField, p: np.ndarray | CellField, s_index: int | None = None) -> CellField:
        rhs_values = rhs.values if isinstance(rhs, CellField) else np.asarray(rhs, dtype=float)
        p_values = p.values if isinstance(p, CellField) else np.asarray(p, dtype=float)
        grid = self.op.grid
        flat = rhs_values.reshape(grid.size, -1)
        scale = max(1.0, float(np.abs(flat).max()))

        defect = grid.weight * (p_values @ flat)
        if np.abs(defect).max() > self.tol_compat * scale:
            logger.error(f"Compatibility defect {np.abs(defect).max():.3e} at s={self.op.s}")
            raise CompatibilityViolation(f"|int rhs p| = {np.abs(defect).max():.3e} exceeds {self.tol_compat:g}")

        bordered_rhs = np.vstack([flat, np.zeros((1, flat.shape[1]))])
        solution = scipy.linalg.lu_solve(self._lu, bordered_rhs)
        chi, multiplier = solution[:-1], solution[-1]
        projected = flat - multiplier[None, :]
        residual = float(np.linalg.norm(self.op.matrix @ chi - projected)) / max(1.0, float(np.linalg.norm(flat)))
        if not np.all(np.isfinite(chi)) or residual > self.tol_solve:
            logger.error(f"Mean-zero solve residual {residual:.3e} at s={self.op.s}")
            raise SolverBreakdown(f"relative residual {residual:.3e} exceeds {self.tol_solve:g}")
        logger.debug(f"Mean-zero solve at s={self.op.s:.6f}: defect {np.abs(defect).max():.2e}, residual {residual:.2e}")
        return CellField(
            values=chi.reshape(rhs_values.shape),
            kind=KIND_BY_NDIM[rhs_values.ndim],
            s_index=s_index,
            mean_zero=True,
            compatibility_defect=float(np.abs(defect).max()),
            residual=residual,
        )


def solve_on_mean_zero(op: CellOperator, rhs: np.ndarray | CellField, p: np.ndarray | CellField) -> CellField:
    return MeanZeroSolver(op).solve(rhs, p)


def s_derivative(samples: List[CellField], ssamples: SSampleSet | None = None) -> List[CellField]:
    """Spectral d/ds across uniformly sampled fields of one period."""
    if ssamples is not None and len(samples) != ssamples.m:
        raise ValidationFailure(f"{len(samples)} fields for {ssamples.m} s-samples")
    stacked = np.stack([f.values for f in samples], axis=0)
    derivative = spectral_derivative(stacked, axis=0)
    return [
        CellField(values=derivative[i], kind=samples[i].kind, s_index=i)
        for i in range(len(samples))
    ]
