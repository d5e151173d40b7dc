import logging

import numpy as np

from homogen.config.settings import settings
from homogen.models.correctors import CorrectorSet
from homogen.models.effective import DriftDecomposition, EffectiveTensors
from homogen.utils.errors import EpsilonNonPositive, NonZeroMean, NotPositiveDefinite, ValidationFailure
from homogen.utils.spectral import spectral_antiderivative, trig_interpolate

logger = logging.getLogger(__name__)


def split_mean(F_samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """F(s) = b + beta(s) with beta of zero period mean."""
    F_samples = np.asarray(F_samples, dtype=float)
    b = F_samples.mean(axis=0)
    return b, F_samples - b


def periodic_antiderivative(beta_samples: np.ndarray) -> np.ndarray:
    beta_samples = np.asarray(beta_samples, dtype=float)
    mean = np.abs(beta_samples.mean(axis=0)).max()
    if mean > settings.TOL_MEAN * max(1.0, float(np.abs(beta_samples).max())):
        logger.error(f"Antiderivative requested for samples with mean {mean:.3e}")
        raise NonZeroMean(f"sample mean {mean:.3e} is not zero")
    return spectral_antiderivative(beta_samples, axis=0)


def drift_decomposition(correctors: CorrectorSet) -> DriftDecomposition:
    levels = [split_mean(correctors.F[j]) for j in range(correctors.schedule.k + 1)]
    b = np.stack([level[0] for level in levels])
    beta = np.stack([level[1] for level in levels])
    B = np.stack([periodic_antiderivative(level[1]) for level in levels])
    logger.info(f"Drift decomposition: b = {b.tolist()}, max |B_0| = {np.abs(B[0]).max():.3e}")
    return DriftDecomposition(alpha=correctors.schedule.alpha, k=correctors.schedule.k, b=b, beta=beta, B=B, m=correctors.m)


def average_theta(theta_samples: np.ndarray) -> EffectiveTensors:
    theta_samples = np.asarray(theta_samples, dtype=float)
    if theta_samples.ndim != 3:
        raise ValidationFailure(f"theta samples must have shape (M, d, d), got {theta_samples.shape}")
    Theta = theta_samples.mean(axis=0)
    Theta_sym = 0.5 * (Theta + Theta.T)
    sym_samples = 0.5 * (theta_samples + np.swapaxes(theta_samples, 1, 2))
    eigenvalues = np.linalg.eigvalsh(sym_samples)
    lam_min = float(eigenvalues.min())
    lam_max = float(eigenvalues.max())
    Theta_eigs = np.linalg.eigvalsh(Theta_sym)
    if lam_min <= 0 or Theta_eigs.min() <= 0:
        logger.error(f"theta_sym not positive definite: min sample eigenvalue {lam_min:.3e}, Theta_sym eigenvalues {Theta_eigs}")
        raise NotPositiveDefinite(f"lambda_min = {lam_min:.3e}")
    logger.info(f"Effective matrix Theta_sym = {Theta_sym.tolist()}, eigenvalue band [{lam_min:.6g}, {lam_max:.6g}]")
    return EffectiveTensors(
        theta=theta_samples,
        Theta=Theta,
        Theta_sym=Theta_sym,
        lambda_min=lam_min,
        lambda_max=lam_max,
        sample_eigenvalues=eigenvalues,
    )


def level_scale(alpha: float, level: int, eps: float) -> float:
    """eps^{-1 + j(2 - alpha)}: speed scale of frame level j."""
    return eps ** (-1.0 + level * (2.0 - alpha))


def drift_frame(dec: DriftDecomposition, eps: float, t, all_oscillations: bool = False) -> np.ndarray:
    """b^eps(t); with all_oscillations the periodic parts of levels j >= 1 are added too.

    Accepts scalar or array t; the result has shape t.shape + (d,).
    """
    if eps <= 0:
        raise EpsilonNonPositive(f"epsilon must be positive, got {eps}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationFailure("drift_frame is defined for t >= 0")
    s = t / eps ** dec.alpha
    frame = np.zeros(t.shape + (dec.b.shape[1],))
    for level in range(dec.k + 1):
        frame += level_scale(dec.alpha, level, eps) * np.multiply.outer(t, dec.b[level])
    frame += eps ** (dec.alpha - 1.0) * trig_interpolate(dec.B[0], s)
    if all_oscillations:
        for level in range(1, dec.k + 1):
            frame += level_scale(dec.alpha, level, eps) * eps ** dec.alpha * trig_interpolate(dec.B[level], s)
    return frame


def drift_velocity(dec: DriftDecomposition, eps: float, t, all_oscillations: bool = False) -> np.ndarray:
    """d b^eps / dt, matching drift_frame term by term."""
    t = np.asarray(t, dtype=float)
    s = t / eps ** dec.alpha
    velocity = np.zeros(t.shape + (dec.b.shape[1],))
    for level in range(dec.k + 1):
        velocity += level_scale(dec.alpha, level, eps) * np.broadcast_to(dec.b[level], velocity.shape)
    velocity += trig_interpolate(dec.beta[0], s) / eps
    if all_oscillations:
        for level in range(1, dec.k + 1):
            velocity += level_scale(dec.alpha, level, eps) * trig_interpolate(dec.beta[level], s)
    return velocity


def cumulative_theta(tensors: EffectiveTensors, alpha: float, eps: float):
    """t -> int_0^t theta_sym(t'/eps^alpha) dt', exact for the trigonometric interpolant."""
    sym = tensors.theta_sym
    oscillation = spectral_antiderivative(sym - tensors.Theta_sym[None, :, :], axis=0)
    scale = eps ** alpha

    def D(t: float) -> np.ndarray:
        return tensors.Theta_sym * t + scale * trig_interpolate(oscillation, t / scale)

    return D
