import logging
import math

import numpy as np

from homogen.models.cell import CellField, SSampleSet, TorusGrid
from homogen.models.coefficient import CoefficientSpec
from homogen.models.correctors import CorrectorSchedule, CorrectorSet
from homogen.models.kernel import KernelSpec, PeriodizedKernel
from homogen.services.cell_service import (
    MeanZeroSolver,
    assemble_generator,
    invariant_density,
    kernel_weight_matrix,
)
from homogen.services.kernel_service import discretize_kernel, periodized_moment_kernel
from homogen.utils.errors import AlphaOutOfRange, ScheduleMismatch
from homogen.utils.pool import map_parallel
from homogen.utils.spectral import spectral_derivative

logger = logging.getLogger(__name__)

ALPHA_TOL = 1e-12


def corrector_schedule(alpha: float) -> CorrectorSchedule:
    if not 0.0 < alpha < 2.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 2), got {alpha}")
    ratio = 1.0 / (2.0 - alpha)
    nearest = round(ratio)
    exceptional = nearest >= 1 and abs(alpha - (2.0 - 1.0 / nearest)) <= ALPHA_TOL
    k = nearest if exceptional else math.floor(ratio)
    gammas = [1.0 + (j - 1) * (2.0 - alpha) for j in range(1, k + 2)]
    if exceptional:
        gammas[-1] = 2.0
    logger.debug(f"Schedule for alpha={alpha}: k={k}, gammas={gammas}, exceptional={exceptional}")
    return CorrectorSchedule(alpha=alpha, k=k, gammas=gammas, exceptional=exceptional)


def _check_schedule(schedule: CorrectorSchedule) -> None:
    expected = corrector_schedule(schedule.alpha)
    if expected.k != schedule.k or len(schedule.gammas) != schedule.k + 1:
        raise ScheduleMismatch(f"schedule k={schedule.k} with {len(schedule.gammas)} exponents does not match alpha={schedule.alpha}")


class MomentKernels:
    """Periodized kernels of order 0, 1, 2 sharing one node quadrature."""

    def __init__(self, kern: KernelSpec, n: int):
        discrete = discretize_kernel(kern, n)
        self.orders: list[PeriodizedKernel] = [periodized_moment_kernel(kern, n, q, discrete) for q in (0, 1, 2)]


def rhs_first_corrector(grid: TorusGrid, kern: KernelSpec, mu: CoefficientSpec, s: float,
                        moments: MomentKernels | None = None) -> CellField:
    """f(xi, s) = int z a(z) mu(xi, xi - z, s) dz on the torus."""
    pk1 = moments.orders[1] if moments else periodized_moment_kernel(kern, grid.n, 1)
    f = kernel_weight_matrix(grid, pk1, mu, s).sum(axis=1)
    return CellField(values=f, kind="vector")


def solvability_value(rhs: CellField | np.ndarray, p: CellField | np.ndarray) -> np.ndarray:
    """F = int rhs p dxi; rhs - F is compatible when p has unit mean."""
    rhs_values = rhs.values if isinstance(rhs, CellField) else np.asarray(rhs)
    p_values = p.values if isinstance(p, CellField) else np.asarray(p)
    return np.tensordot(p_values, rhs_values, axes=([0], [0])) / p_values.shape[0]


def _second_order_flux(chi1: np.ndarray, grid: TorusGrid, mu: CoefficientSpec, s: float,
                       moments: MomentKernels) -> np.ndarray:
    """int a mu (z (x) z / 2 - z (x) chi1(xi - z)) dz at every node, shape (S, d, d)."""
    k1 = kernel_weight_matrix(grid, moments.orders[1], mu, s)
    k2 = kernel_weight_matrix(grid, moments.orders[2], mu, s)
    return 0.5 * k2.sum(axis=1) - np.einsum("ija,jb->iab", k1, chi1)


def theta_of_s(chi1: CellField | np.ndarray, p: CellField | np.ndarray, b0_plus_beta0: np.ndarray,
               grid: TorusGrid, kern: KernelSpec, mu: CoefficientSpec, s: float,
               moments: MomentKernels | None = None) -> np.ndarray:
    moments = moments or MomentKernels(kern, grid.n)
    chi_values = chi1.values if isinstance(chi1, CellField) else np.asarray(chi1)
    p_values = p.values if isinstance(p, CellField) else np.asarray(p)
    flux = _second_order_flux(chi_values, grid, mu, s, moments)
    drift_part = np.outer(solvability_value(chi_values, p_values), np.asarray(b0_plus_beta0))
    return drift_part + solvability_value(flux, p_values)


def solve_kappa(chi1: CellField | np.ndarray, p: CellField | np.ndarray, theta_s: np.ndarray,
                b0_plus_beta0: np.ndarray, grid: TorusGrid, kern: KernelSpec, mu: CoefficientSpec, s: float,
                moments: MomentKernels | None = None, solver: MeanZeroSolver | None = None) -> CellField:
    moments = moments or MomentKernels(kern, grid.n)
    solver = solver or MeanZeroSolver(assemble_generator(grid, kern, mu, s, pk=moments.orders[0]))
    chi_values = chi1.values if isinstance(chi1, CellField) else np.asarray(chi1)
    flux = _second_order_flux(chi_values, grid, mu, s, moments)
    rhs = theta_s[None, :, :] - np.einsum("ia,b->iab", chi_values, np.asarray(b0_plus_beta0)) - flux
    return solver.solve(rhs, p)


def build_corrector_chain(schedule: CorrectorSchedule, grid: TorusGrid, kern: KernelSpec,
                          mu: CoefficientSpec, ssamples: SSampleSet,
                          tol_compat: float | None = None, tol_solve: float | None = None) -> CorrectorSet:
    _check_schedule(schedule)
    moments = MomentKernels(kern, grid.n)
    s_points = ssamples.points
    m, size, d = ssamples.m, grid.size, grid.dimension
    logger.info(f"Building corrector chain: alpha={schedule.alpha}, k={schedule.k}, N={grid.n}, d={d}, M={m}")

    def first_level(index: int):
        s = float(s_points[index])
        generator = assemble_generator(grid, kern, mu, s, pk=moments.orders[0])
        adjoint = assemble_generator(grid, kern, mu, s, adjoint=True, pk=moments.orders[0])
        p = invariant_density(adjoint, s_index=index)
        solver = MeanZeroSolver(generator, tol_compat, tol_solve)
        f = rhs_first_corrector(grid, kern, mu, s, moments)
        F1 = solvability_value(f, p)
        chi1 = solver.solve(f.values - F1[None, :], p, s_index=index)
        return solver, p, f, F1, chi1

    first = map_parallel(first_level, range(m))
    solvers = [item[0] for item in first]
    p = np.stack([item[1].values for item in first])
    f = np.stack([item[2].values for item in first])

    chi = np.zeros((schedule.k + 1, m, size, d))
    F = np.zeros((schedule.k + 1, m, d))
    defects = np.zeros((schedule.k + 2, m))
    residuals = np.zeros((schedule.k + 2, m))
    for index, item in enumerate(first):
        F[0, index] = item[3]
        chi[0, index] = item[4].values
        defects[0, index] = item[4].compatibility_defect
        residuals[0, index] = item[4].residual

    # level j needs d/ds chi_j on every sample before chi_{j+1} can be solved
    for level in range(1, schedule.k + 1):
        dchi = spectral_derivative(chi[level - 1], axis=0)

        def next_level(index: int, dchi=dchi):
            F_next = solvability_value(dchi[index], p[index])
            return F_next, solvers[index].solve(dchi[index] - F_next[None, :], p[index], s_index=index)

        for index, (F_next, field) in enumerate(map_parallel(next_level, range(m))):
            F[level, index] = F_next
            chi[level, index] = field.values
            defects[level, index] = field.compatibility_defect
            residuals[level, index] = field.residual
        logger.debug(f"Chain level {level + 1}: max |F| = {np.abs(F[level]).max():.3e}")

    def second_order(index: int):
        s = float(s_points[index])
        theta = theta_of_s(chi[0, index], p[index], F[0, index], grid, kern, mu, s, moments)
        kappa = solve_kappa(chi[0, index], p[index], theta, F[0, index], grid, kern, mu, s,
                            moments=moments, solver=solvers[index])
        return theta, kappa

    theta = np.zeros((m, d, d))
    kappa = np.zeros((m, size, d, d))
    for index, (theta_s, kappa_field) in enumerate(map_parallel(second_order, range(m))):
        theta[index] = theta_s
        kappa[index] = kappa_field.values
        defects[-1, index] = kappa_field.compatibility_defect
        residuals[-1, index] = kappa_field.residual

    logger.info(f"Corrector chain done: max defect {defects.max():.2e}, max residual {residuals.max():.2e}")
    return CorrectorSet(
        schedule=schedule,
        n=grid.n,
        dimension=d,
        s_points=s_points,
        p=p,
        f=f,
        chi=chi,
        kappa=kappa,
        F=F,
        theta=theta,
        compatibility_defects=defects,
        residuals=residuals,
    )
