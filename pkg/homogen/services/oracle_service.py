"""Slow reference path for small cell problems.

Assembles every matrix entry tap by tap, solves with numpy's dense routines and
integrates by plain summation. Only the kernel quadrature is shared with the
production path.
"""
import logging
import math
from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict

from homogen.models.coefficient import CoefficientSpec, TrigFactor
from homogen.models.correctors import CorrectorSet
from homogen.models.run import RunConfig
from homogen.services.kernel_service import discretize_kernel
from homogen.utils.errors import OracleDisagreement, ValidationFailure

logger = logging.getLogger(__name__)

MAX_ORACLE_SIZE = 1024


class OracleReference(BaseModel):
    s_points: np.ndarray
    p: np.ndarray  # (M, S)
    chi1: np.ndarray  # (M, S, d)
    F1: np.ndarray  # (M, d)
    theta: np.ndarray  # (M, d, d)
    Theta: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _factor(factor: TrigFactor, point, dimension: int) -> float:
    if factor.kind == "one":
        return 1.0
    phase = 2.0 * math.pi * sum(h * x for h, x in zip(factor.harmonic_vector(dimension), point))
    return math.sin(phase) if factor.kind == "sin" else math.cos(phase)


def _mu(mu: CoefficientSpec, xi, eta, s: float) -> float:
    value = mu.constant
    for term in mu.terms:
        value += (term.coefficient * _factor(term.xi, xi, mu.dimension)
                  * _factor(term.eta, eta, mu.dimension) * _factor(term.s, (s,), 1))
    return value


def _node_list(n: int, d: int) -> list:
    if d == 1:
        return [(i,) for i in range(n)]
    return [(i, j) for i in range(n) for j in range(n)]


def _flat(index, n: int) -> int:
    flat = 0
    for c in index:
        flat = flat * n + (c % n)
    return flat


def _sample(cfg: RunConfig, s: float, kern, nodes, n: int, d: int):
    size = len(nodes)
    w = 1.0 / size
    A = np.zeros((size, size))
    f = np.zeros((size, d))
    second = np.zeros((size, d, d))
    first_taps = []  # (i, j, weight * mu, z) for the theta integral
    for i, node in enumerate(nodes):
        xi = tuple(c / n for c in node)
        for offset, weight in zip(kern.offsets, kern.weights):
            target = tuple(c - int(l) for c, l in zip(node, offset))
            j = _flat(target, n)
            eta = tuple((c % n) / n for c in target)
            rate = weight * _mu(cfg.mu, xi, eta, s)
            z = np.asarray(offset, dtype=float) / n
            A[i, j] += rate
            A[i, i] -= rate
            f[i] += rate * z
            second[i] += 0.5 * rate * np.outer(z, z)
            first_taps.append((i, j, rate, z))

    bordered = np.zeros((size + 1, size + 1))
    bordered[:size, :size] = A.T
    bordered[:size, size] = 1.0
    bordered[size, :size] = w
    rhs = np.zeros(size + 1)
    rhs[size] = 1.0
    p = np.linalg.solve(bordered, rhs)[:size]

    F1 = np.zeros(d)
    for i in range(size):
        F1 += w * p[i] * f[i]
    system = np.vstack([A, np.full((1, size), w)])
    chi1 = np.zeros((size, d))
    for a in range(d):
        target = np.concatenate([f[:, a] - F1[a], [0.0]])
        chi1[:, a] = np.linalg.lstsq(system, target, rcond=None)[0]

    chi_mean = np.zeros(d)
    flux = np.zeros((d, d))
    for i in range(size):
        chi_mean += w * p[i] * chi1[i]
        flux += w * p[i] * second[i]
    for i, j, rate, z in first_taps:
        flux -= w * p[i] * rate * np.outer(z, chi1[j])
    theta = np.outer(chi_mean, F1) + flux
    return p, chi1, F1, theta


def dense_oracle(cfg: RunConfig) -> OracleReference:
    n, d, m = cfg.grid.n_cell, cfg.grid.dimension, cfg.grid.m
    if n ** d > MAX_ORACLE_SIZE:
        raise ValidationFailure(f"oracle handles at most {MAX_ORACLE_SIZE} nodes, got {n ** d}")
    kern = discretize_kernel(cfg.kernel, n)
    nodes = _node_list(n, d)
    s_points = np.arange(m) / m
    results = [_sample(cfg, float(s), kern, nodes, n, d) for s in s_points]
    theta = np.stack([r[3] for r in results])
    logger.info(f"Dense oracle done: N={n}, d={d}, M={m}")
    return OracleReference(
        s_points=s_points,
        p=np.stack([r[0] for r in results]),
        chi1=np.stack([r[1] for r in results]),
        F1=np.stack([r[2] for r in results]),
        theta=theta,
        Theta=theta.sum(axis=0) / m,
    )


def compare_with_oracle(correctors: CorrectorSet, reference: OracleReference, tol: float = 1e-8) -> Dict[str, float]:
    deviations = {
        "p": float(np.abs(correctors.p - reference.p).max()),
        "chi1": float(np.abs(correctors.chi[0] - reference.chi1).max()),
        "F1": float(np.abs(correctors.F[0] - reference.F1).max()),
        "theta": float(np.abs(correctors.theta - reference.theta).max()),
        "Theta": float(np.abs(correctors.theta.mean(axis=0) - reference.Theta).max()),
    }
    worst = max(deviations.values())
    if worst > tol:
        logger.error(f"Production and oracle disagree: {deviations}")
        raise OracleDisagreement(f"max deviation {worst:.3e} exceeds {tol:g}: {deviations}")
    logger.info(f"Oracle agreement: max deviation {worst:.2e}")
    return deviations
