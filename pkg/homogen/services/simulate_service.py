import logging
import math
from typing import Callable, List, Sequence

import numpy as np
from scipy import sparse

from homogen.config.settings import settings
from homogen.models.coefficient import CoefficientSpec
from homogen.models.kernel import DiscreteKernel, KernelSpec
from homogen.models.simulation import BoxGrid, EvolutionState
from homogen.services.cell_service import check_coercivity, factor_values, time_values
from homogen.services.kernel_service import discretize_kernel
from homogen.utils.errors import (
    CFLViolation,
    CheckpointMismatch,
    GridMismatch,
    NonFiniteValue,
    NotPSD,
    ValidationFailure,
)
from homogen.utils.spectral import box_wavenumbers, phase_shift

logger = logging.getLogger(__name__)

SUP_TOL = 1e-13
PSD_TOL = 1e-14


class BoxOperator:
    """L^eps(t) on the periodic box as a sum of time-modulated sparse stencils.

    Each coefficient term contributes one fixed stencil whose rows sum to zero;
    L^eps(t) = eps^-2 sum_k m_k(t / eps^alpha) L_k.
    """

    def __init__(self, grid: BoxGrid, kern: KernelSpec | DiscreteKernel, mu: CoefficientSpec, alpha: float):
        if isinstance(kern, KernelSpec):
            kern = discretize_kernel(kern, grid.n_cell)
        if kern.n != grid.n_cell:
            raise GridMismatch(f"kernel quadrature at N={kern.n} but box has {grid.n_cell} points per cell")
        if kern.dimension != 1 or mu.dimension != 1:
            raise GridMismatch("box simulation is one-dimensional")
        check_coercivity(mu)
        self.grid = grid
        self.kern = kern
        self.mu = mu
        self.alpha = alpha

        taps = kern.offsets[:, 0]
        n_box, n_cell = grid.n_box, grid.n_cell
        cells = grid.cell_index
        rows = np.repeat(np.arange(n_box), taps.size)
        cols = np.mod(rows - np.tile(taps, n_box), n_box)
        xi = (cells / n_cell)[:, None]
        eta = (np.mod(cells[:, None] - taps[None, :], n_cell) / n_cell).reshape(-1, 1)

        self.time_factors = [None]
        spatial = [np.broadcast_to(mu.constant * kern.weights, (n_box, taps.size))]
        for term in mu.terms:
            phi = factor_values(term.xi, xi, 1)
            psi = factor_values(term.eta, eta, 1).reshape(n_box, taps.size)
            spatial.append(term.coefficient * phi[:, None] * psi * kern.weights[None, :])
            self.time_factors.append(term.s)

        self.stencils = []
        self.exit_rates = []
        for values in spatial:
            off = sparse.coo_matrix((np.ravel(values), (rows, cols)), shape=(n_box, n_box)).tocsr()
            exit_rate = np.asarray(values.sum(axis=1)).ravel()
            self.stencils.append((off - sparse.diags(exit_rate)).tocsr())
            self.exit_rates.append(exit_rate)
        logger.debug(f"Box operator: {n_box} nodes, {taps.size} taps, {len(self.stencils)} stencils")

    def modulation(self, t: float) -> List[float]:
        s = t / self.grid.eps ** self.alpha
        return [1.0 if f is None else float(time_values(f, s)) for f in self.time_factors]

    def exit_rate(self, t: float) -> np.ndarray:
        return sum(m * r for m, r in zip(self.modulation(t), self.exit_rates))

    def apply(self, u: np.ndarray, t: float) -> np.ndarray:
        if u.shape != (self.grid.n_box,):
            raise GridMismatch(f"field of shape {u.shape} on a box of {self.grid.n_box} nodes")
        result = np.zeros_like(u, dtype=float)
        for m, stencil in zip(self.modulation(t), self.stencils):
            if m != 0.0:
                result += m * (stencil @ u)
        return result / self.grid.eps ** 2

    def scaled_row(self, i: int, t: float) -> np.ndarray:
        """Row i of eps^2 L^eps(t) as a dense vector."""
        row = np.zeros(self.grid.n_box)
        for m, stencil in zip(self.modulation(t), self.stencils):
            row += m * stencil.getrow(i).toarray().ravel()
        return row

    def max_rate(self) -> float:
        """Largest exit rate over a scan of one period of s."""
        scale = self.grid.eps ** self.alpha
        scan = np.arange(settings.CFL_SCAN_SAMPLES) / settings.CFL_SCAN_SAMPLES
        return max(float(self.exit_rate(s * scale).max()) for s in scan)


def apply_L_eps(u: np.ndarray, t: float, grid: BoxGrid, kern: KernelSpec | DiscreteKernel,
                mu: CoefficientSpec, alpha: float) -> np.ndarray:
    return BoxOperator(grid, kern, mu, alpha).apply(np.asarray(u, dtype=float), t)


def _checkpoint_list(checkpoints: Sequence[float], T: float) -> List[float]:
    points = sorted(float(c) for c in checkpoints)
    if not points or points[0] <= 0 or points[-1] > T + 1e-15:
        raise CheckpointMismatch(f"checkpoints must lie in (0, {T}], got {points}")
    return points


def evolve_epsilon(u0: np.ndarray, T: float, grid: BoxGrid, kern: KernelSpec | DiscreteKernel,
                   mu: CoefficientSpec, alpha: float, checkpoints: Sequence[float],
                   dt: float | None = None, operator: BoxOperator | None = None,
                   cfl_fraction: float | None = None) -> EvolutionState:
    """Explicit Euler for d_t u = L^eps(t) u, landing exactly on each checkpoint.

    Without an explicit dt the step is cfl_fraction * eps^2 / rate. Under a drift
    b the Euler error acts as an extra diffusion of about dt * |b / eps|^2 / 2,
    which stays O(cfl_fraction) as eps -> 0; drifting runs need a small fraction.
    """
    op = operator or BoxOperator(grid, kern, mu, alpha)
    points = _checkpoint_list(checkpoints, T)
    fraction = settings.CFL_SAFETY if cfl_fraction is None else cfl_fraction
    if not 0.0 < fraction <= 1.0:
        raise CFLViolation(f"CFL fraction must lie in (0, 1], got {fraction}")
    rate = op.max_rate()
    dt_max = fraction * grid.eps ** 2 / rate
    if dt is not None and dt * rate / grid.eps ** 2 > 1.0:
        logger.error(f"Time step {dt:.3e} breaks the convexity bound {grid.eps ** 2 / rate:.3e}")
        raise CFLViolation(f"dt = {dt:.3e} exceeds eps^2 / rate = {grid.eps ** 2 / rate:.3e}")
    target = dt if dt is not None else dt_max

    u = np.array(u0, dtype=float)
    nonnegative = bool(u.min() >= 0)
    sup_history = [float(np.abs(u).max())]
    mass_history = [float(u.sum() * grid.h)]
    snapshots = []
    max_principle_ok = True
    positivity_ok = True
    t = 0.0
    steps = 0
    logger.info(f"Evolving eps={grid.eps:.5g}, alpha={alpha}: {grid.n_box} nodes, dt <= {target:.3e}, T={T}")

    for stop in points:
        span = stop - t
        n_sub = max(1, math.ceil(span / target - 1e-9))
        step = span / n_sub
        for sub in range(n_sub):
            u = u + step * op.apply(u, t)
            t = stop if sub == n_sub - 1 else t + step
            steps += 1
            sup = float(np.abs(u).max())
            if not math.isfinite(sup):
                logger.error(f"Non-finite field after {steps} steps at t={t:.6g}")
                raise NonFiniteValue(f"non-finite values at t={t:.6g}")
            if sup > sup_history[-1] * (1.0 + SUP_TOL):
                max_principle_ok = False
            if nonnegative and u.min() < -SUP_TOL * sup_history[0]:
                positivity_ok = False
            sup_history.append(sup)
            mass_history.append(float(u.sum() * grid.h))
        snapshots.append(u.copy())

    if not max_principle_ok:
        logger.warning(f"Sup-norm increased during the eps={grid.eps:.5g} run")
    if not positivity_ok:
        logger.warning(f"Positivity lost during the eps={grid.eps:.5g} run")
    return EvolutionState(
        spacing=grid.h,
        length=grid.length,
        t=t,
        checkpoints=points,
        snapshots=np.stack(snapshots),
        dt=target,
        steps=steps,
        sup_history=np.array(sup_history),
        mass_history=np.array(mass_history),
        max_principle_ok=max_principle_ok,
        positivity_ok=positivity_ok,
    )


def _check_psd(D: np.ndarray, label: str) -> None:
    if not np.allclose(D, D.T, atol=PSD_TOL * max(1.0, float(np.abs(D).max()))):
        raise NotPSD(f"{label} is not symmetric")
    if np.linalg.eigvalsh(D).min() < -PSD_TOL * max(1.0, float(np.abs(D).max())):
        raise NotPSD(f"{label} has a negative eigenvalue")


def solve_heat_multiplier(u0: np.ndarray, D_cumulative: Callable[[float], np.ndarray],
                          grid: BoxGrid, checkpoints: Sequence[float]) -> EvolutionState:
    """u_hat(kappa, t) = exp(-(2 pi)^2 kappa.D(t)kappa) u0_hat(kappa) on box harmonics."""
    points = sorted(float(c) for c in checkpoints)
    kappa = box_wavenumbers(grid.n_box, grid.length)
    u0_hat = np.fft.fft(np.asarray(u0, dtype=float))
    snapshots = []
    previous = np.zeros((1, 1))
    for t in points:
        D = np.atleast_2d(np.asarray(D_cumulative(t), dtype=float))
        _check_psd(D, f"D({t})")
        _check_psd(D - previous, f"D({t}) - D(previous checkpoint)")
        previous = D
        multiplier = np.exp(-(2.0 * np.pi) ** 2 * kappa ** 2 * D[0, 0])
        snapshots.append(np.real(np.fft.ifft(u0_hat * multiplier)))
    return EvolutionState(
        spacing=grid.h,
        length=grid.length,
        t=points[-1] if points else 0.0,
        checkpoints=points,
        snapshots=np.stack(snapshots) if snapshots else np.zeros((0, grid.n_box)),
    )


def shift_field(u: np.ndarray, c, grid: BoxGrid | None = None, length: float | None = None) -> np.ndarray:
    """u(x - c) on the box, c taken modulo the box length."""
    length = grid.length if grid is not None else length
    if length is None:
        raise ValidationFailure("shift_field needs the box length")
    return phase_shift(u, float(np.ravel(c)[0]), length)


def sup_l2_error(traj_a: EvolutionState, traj_b: EvolutionState, normalize: bool = False) -> float:
    if traj_a.checkpoints != traj_b.checkpoints:
        raise CheckpointMismatch(f"checkpoints differ: {traj_a.checkpoints} vs {traj_b.checkpoints}")
    if traj_a.snapshots.shape != traj_b.snapshots.shape or not math.isclose(traj_a.spacing, traj_b.spacing):
        raise CheckpointMismatch("trajectories live on different grids")
    h = traj_a.spacing
    distances = np.sqrt(h * np.sum((traj_a.snapshots - traj_b.snapshots) ** 2, axis=1))
    error = float(distances.max()) if distances.size else 0.0
    if normalize:
        reference = float(np.sqrt(h * np.sum(traj_b.snapshots ** 2, axis=1)).max())
        error = error / reference if reference > 0 else error
    return error


def gaussian_initial(grid: BoxGrid, width: float = 1.0, center: float = 0.0) -> np.ndarray:
    return np.exp(-((grid.x - center) / width) ** 2)


def boundary_mass(u: np.ndarray, grid: BoxGrid, distance: float = 1.0) -> float:
    """Mass of |u| within `distance` of the box boundary."""
    near = np.abs(grid.x) >= 0.5 * grid.length - distance
    return float(np.abs(u[near]).sum() * grid.h)
