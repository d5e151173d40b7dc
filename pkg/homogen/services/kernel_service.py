import functools
import itertools
import logging
import math

import numpy as np
from scipy import integrate
from scipy.stats import norm, truncnorm

from homogen.models.kernel import DiscreteKernel, KernelSpec, PeriodizedKernel, ValidationReport
from homogen.utils.errors import NegativeDensity, NonUnitMass, UnboundedSupport, ValidationFailure

logger = logging.getLogger(__name__)

EDGE_TOL = 1e-12
MASS_TOL = 1e-8


def density_1d(spec: KernelSpec, z: np.ndarray, center: float = 0.0) -> np.ndarray:
    """One-dimensional factor of a(z) with the configured jump convention."""
    u = np.atleast_1d(np.asarray(z, dtype=float)) - center
    r = spec.half_width
    at_left = np.isclose(u, -r, rtol=0.0, atol=EDGE_TOL)
    at_right = np.isclose(u, r, rtol=0.0, atol=EDGE_TOL)
    inside = (np.abs(u) < r) & ~at_left & ~at_right

    values = np.zeros_like(u)
    if spec.family == "triangular":
        # continuous, the endpoint convention is irrelevant
        values[inside] = (1.0 - np.abs(u[inside]) / r) / r
        return values

    if spec.family == "uniform":
        height = np.full_like(u, 1.0 / (2.0 * r))
    else:
        sigma = spec.sigma
        height = norm.pdf(u, scale=sigma) / (2.0 * norm.cdf(r / sigma) - 1.0)
    values[inside] = height[inside]
    if spec.boundary == "symmetric":
        values[at_left] = 0.5 * height[at_left]
        values[at_right] = 0.5 * height[at_right]
    else:
        values[at_left] = height[at_left]
    return values


def density(spec: KernelSpec, z: np.ndarray) -> np.ndarray:
    """a(z) for points z of shape (n, d); product of the 1D factors."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    values = np.ones(z.shape[0])
    for axis, c in enumerate(spec.centers):
        values *= density_1d(spec, z[:, axis], c)
    return values


def _variance_1d(spec: KernelSpec) -> float:
    r = spec.half_width
    if spec.family == "uniform":
        return r * r / 3.0
    if spec.family == "triangular":
        return r * r / 6.0
    return float(truncnorm(-r / spec.sigma, r / spec.sigma, scale=spec.sigma).var())


def _analytic_moments(spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    c = np.array(spec.centers)
    m2 = np.outer(c, c) + _variance_1d(spec) * np.eye(spec.dimension)
    return c, m2


def validate_kernel(spec: KernelSpec) -> ValidationReport:
    violations = []
    mass = float("nan")
    m1 = [float("nan")] * spec.dimension
    m2 = [[float("nan")] * spec.dimension for _ in range(spec.dimension)]

    if not spec.is_bounded:
        violations.append(f"UnboundedSupport: {spec.family} kernel has no finite support radius")
    elif spec.half_width <= 0 or (spec.family == "truncated_gaussian" and (spec.sigma or 0) <= 0):
        violations.append(f"NonUnitMass: degenerate {spec.family} kernel (half_width={spec.half_width}, sigma={spec.sigma})")
    else:
        r = spec.half_width
        samples = np.linspace(-r, r, 2001)
        if np.any(density_1d(spec, samples) < 0):
            violations.append("NegativeDensity: a(z) takes negative values")
        mass_1d, _ = integrate.quad(lambda x: float(density_1d(spec, x)[0]), -r, r, points=[0.0], limit=200)
        mass = mass_1d ** spec.dimension
        if abs(mass - 1.0) > MASS_TOL:
            violations.append(f"NonUnitMass: kernel mass {mass:.12g} != 1")
        first, second = _analytic_moments(spec)
        m1 = first.tolist()
        m2 = second.tolist()

    report = ValidationReport(
        family=spec.family,
        dimension=spec.dimension,
        mass=mass,
        first_moment=m1,
        second_moment=m2,
        violations=violations,
    )
    if violations:
        logger.warning(f"Kernel validation flagged {len(violations)} violation(s): {violations}")
    else:
        logger.debug(f"Kernel {spec.family} valid: mass={mass}, m1={m1}")
    return report


def raise_for_violations(report: ValidationReport) -> None:
    errors = {
        "UnboundedSupport": UnboundedSupport,
        "NegativeDensity": NegativeDensity,
        "NonUnitMass": NonUnitMass,
    }
    for violation in report.violations:
        name, _, message = violation.partition(":")
        raise errors.get(name, ValidationFailure)(message.strip())


def discretize_kernel(spec: KernelSpec, n: int) -> DiscreteKernel:
    """Sample a on z_l = l/N and renormalize the weights to unit mass."""
    if not spec.is_bounded:
        raise UnboundedSupport(f"cannot discretize {spec.family} kernel without finite support")
    axes = []
    raw_mass = 1.0
    for c in spec.centers:
        lo = math.floor((c - spec.half_width) * n) - 1
        hi = math.ceil((c + spec.half_width) * n) + 1
        offsets = np.arange(lo, hi + 1)
        values = density_1d(spec, offsets / n, c)
        keep = values > 0
        mass_1d = values[keep].sum() / n
        raw_mass *= mass_1d
        axes.append((offsets[keep], values[keep] / values[keep].sum()))

    offsets = np.array(list(itertools.product(*[a[0] for a in axes])), dtype=np.int64).reshape(-1, spec.dimension)
    weights = functools.reduce(np.multiply.outer, [a[1] for a in axes]).ravel()
    logger.debug(f"Discretized {spec.family} kernel at N={n}: {weights.size} taps, raw mass {raw_mass:.15g}")
    return DiscreteKernel(n=n, dimension=spec.dimension, offsets=offsets, weights=weights, raw_mass=raw_mass)


def _tap_powers(kern: DiscreteKernel, order: int) -> np.ndarray:
    z = kern.nodes
    if order == 0:
        return kern.weights.copy()
    if order == 1:
        return kern.weights[:, None] * z
    return kern.weights[:, None, None] * z[:, :, None] * z[:, None, :]


def kernel_moment(spec: KernelSpec, order: int, discrete: bool = False, n: int | None = None):
    """Analytic moment of a, or the moment of its renormalized node quadrature."""
    if order not in (0, 1, 2):
        raise ValidationFailure(f"moment order must be 0, 1 or 2, got {order}")
    if discrete:
        if n is None:
            raise ValidationFailure("discrete moments need a resolution N")
        return _tap_powers(discretize_kernel(spec, n), order).sum(axis=0)
    if order == 0:
        return 1.0
    m1, m2 = _analytic_moments(spec)
    return m1 if order == 1 else m2


def fold_index(offsets: np.ndarray, n: int) -> np.ndarray:
    """Row-major torus index of lattice offsets taken modulo N."""
    wrapped = np.mod(offsets, n)
    index = np.zeros(wrapped.shape[0], dtype=np.int64)
    for axis in range(wrapped.shape[1]):
        index = index * n + wrapped[:, axis]
    return index


def periodized_moment_kernel(spec: KernelSpec, n: int, order: int,
                             kern: DiscreteKernel | None = None) -> PeriodizedKernel:
    if n < 4:
        raise ValidationFailure(f"periodized kernel needs N >= 4, got {n}")
    kern = kern or discretize_kernel(spec, n)
    powers = _tap_powers(kern, order)
    size = n ** spec.dimension
    values = np.zeros((size,) + powers.shape[1:])
    np.add.at(values, fold_index(kern.offsets, n), powers)
    values *= size
    return PeriodizedKernel(order=order, n=n, dimension=spec.dimension, values=values)
