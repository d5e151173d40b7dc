import logging

import numpy as np

from homogen.models.correctors import CorrectorSet
from homogen.models.effective import DriftDecomposition, EffectiveTensors
from homogen.models.run import RunConfig
from homogen.models.simulation import BoxGrid
from homogen.services.effective_service import drift_frame
from homogen.services.harness_service import box_grid, run_effective
from homogen.services.kernel_service import discretize_kernel
from homogen.services.simulate_service import BoxOperator, gaussian_initial
from homogen.utils.errors import EpsilonNonPositive
from homogen.utils.spectral import box_wavenumbers, trig_interpolate

logger = logging.getLogger(__name__)

FD_FRACTION = 1e-3


class AnsatzField:
    """Two-scale expansion w^eps built on a heat solution u with matrix Theta_sym.

    w(x, t) = u(x - b(t), t) + sum_j eps^gamma_j chi_j(x/eps, s) u_x + eps^2 kappa(x/eps, s) u_xx
    with s = t / eps^alpha and b the frame including every oscillating level.
    """

    def __init__(self, cfg: RunConfig, eps: float, correctors: CorrectorSet, dec: DriftDecomposition,
                 tensors: EffectiveTensors, grid: BoxGrid | None = None):
        if eps <= 0:
            raise EpsilonNonPositive(f"epsilon must be positive, got {eps}")
        self.cfg = cfg
        self.eps = eps
        self.correctors = correctors
        self.dec = dec
        self.tensors = tensors
        self.grid = grid or box_grid(cfg, eps)
        self.u0_hat = np.fft.fft(gaussian_initial(self.grid, cfg.initial.width, cfg.initial.center))
        self.kappa = box_wavenumbers(self.grid.n_box, self.grid.length)
        self.Theta = float(tensors.Theta_sym[0, 0])
        self.cells = self.grid.cell_index

    def slow_time(self, t: float) -> float:
        return t / self.eps ** self.cfg.alpha

    def profile(self, t: float, order: int) -> np.ndarray:
        """order-th x-derivative of u(x - b(t), t) on the box."""
        shift = float(drift_frame(self.dec, self.eps, t, all_oscillations=True)[0])
        factor = (2j * np.pi * self.kappa) ** order
        factor = factor * np.exp(-(2.0 * np.pi * self.kappa) ** 2 * self.Theta * t)
        factor = factor * np.exp(-2j * np.pi * self.kappa * (shift - self.grid.length * np.floor(shift / self.grid.length)))
        return np.real(np.fft.ifft(self.u0_hat * factor))

    def correction(self, t: float) -> np.ndarray:
        s = self.slow_time(t)
        gammas = self.correctors.schedule.gammas
        du = self.profile(t, 1)
        total = np.zeros(self.grid.n_box)
        for level, gamma in enumerate(gammas):
            chi = trig_interpolate(self.correctors.chi[level], s)[:, 0]
            total += self.eps ** gamma * chi[self.cells] * du
        kappa = trig_interpolate(self.correctors.kappa, s)[:, 0, 0]
        return total + self.eps ** 2 * kappa[self.cells] * self.profile(t, 2)

    def value(self, t: float) -> np.ndarray:
        return self.profile(t, 0) + self.correction(t)

    def target(self, t: float) -> np.ndarray:
        """[d_t u - theta(s) u_xx] evaluated in the moving frame."""
        theta_s = float(trig_interpolate(self.tensors.theta_sym, self.slow_time(t))[0, 0])
        return (self.Theta - theta_s) * self.profile(t, 2)


def ansatz_residual(cfg: RunConfig, eps: float, t: float | None = None, effective: tuple | None = None) -> float:
    """L2 norm of d_t w - L^eps w - [d_t u - theta : grad grad u] at one time."""
    correctors, dec, tensors = effective or run_effective(cfg)
    field = AnsatzField(cfg, eps, correctors, dec, tensors)
    t = 0.5 * cfg.time.T if t is None else t
    delta = FD_FRACTION * min(eps ** 2, eps ** cfg.alpha)
    dw = (field.value(t + delta) - field.value(t - delta)) / (2.0 * delta)
    op = BoxOperator(field.grid, discretize_kernel(cfg.kernel, field.grid.n_cell), cfg.mu, cfg.alpha)
    remainder = dw - op.apply(field.value(t), t) - field.target(t)
    residual = float(np.sqrt(field.grid.h * np.sum(remainder ** 2)))
    logger.info(f"Ansatz residual at eps={eps:.5g}, t={t}: {residual:.6e}")
    return residual


def initial_corrector_norm(cfg: RunConfig, eps: float, effective: tuple | None = None) -> float:
    """L2 norm of the corrector part of w^eps at t = 0."""
    correctors, dec, tensors = effective or run_effective(cfg)
    field = AnsatzField(cfg, eps, correctors, dec, tensors)
    correction = field.correction(0.0)
    norm = float(np.sqrt(field.grid.h * np.sum(correction ** 2)))
    logger.info(f"Initial corrector norm at eps={eps:.5g}: {norm:.6e}")
    return norm
