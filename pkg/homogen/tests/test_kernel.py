import numpy as np
import pytest

from homogen.models.kernel import KernelSpec
from homogen.services.kernel_service import (
    density_1d,
    discretize_kernel,
    kernel_moment,
    periodized_moment_kernel,
    raise_for_violations,
    validate_kernel,
)
from homogen.utils.errors import NonUnitMass, UnboundedSupport


def test_validate_uniform_centered(uniform01):
    report = validate_kernel(uniform01)
    assert report.ok
    assert report.mass == pytest.approx(1.0, abs=1e-10)
    assert report.first_moment == pytest.approx([0.0])
    assert report.second_moment[0][0] == pytest.approx(1 / 3)


def test_validate_shifted_uniform(uniform11):
    report = validate_kernel(uniform11)
    assert report.ok
    assert report.first_moment == pytest.approx([1.0])
    assert report.second_moment[0][0] == pytest.approx(4 / 3)


def test_validate_triangular(triangular01):
    report = validate_kernel(triangular01)
    assert report.ok
    assert report.first_moment == pytest.approx([0.0])
    assert report.second_moment[0][0] == pytest.approx(1 / 6)


def test_truncated_gaussian_has_unit_mass():
    spec = KernelSpec(family="truncated-gaussian", half_width=1.5, sigma=0.5)
    assert spec.family == "truncated_gaussian"
    report = validate_kernel(spec)
    assert report.ok
    assert report.mass == pytest.approx(1.0, abs=1e-8)


def test_unbounded_support_flagged():
    spec = KernelSpec(family="uniform", half_width=float("inf"))
    report = validate_kernel(spec)
    assert not report.ok
    with pytest.raises(UnboundedSupport):
        raise_for_violations(report)
    with pytest.raises(UnboundedSupport):
        discretize_kernel(spec, 16)


def test_degenerate_width_is_not_unit_mass():
    report = validate_kernel(KernelSpec(family="uniform", half_width=0.0))
    with pytest.raises(NonUnitMass):
        raise_for_violations(report)


def test_symmetric_endpoint_takes_half_height(uniform01):
    values = density_1d(uniform01, np.array([-1.0, 0.0, 1.0]))
    assert values.tolist() == [0.25, 0.5, 0.25]


def test_left_closed_endpoint_convention():
    spec = KernelSpec(family="uniform", half_width=1.0, boundary="left_closed")
    values = density_1d(spec, np.array([-1.0, 0.0, 1.0]))
    assert values.tolist() == [0.5, 0.5, 0.0]
    m1 = kernel_moment(spec, 1, discrete=True, n=64)
    assert m1[0] == pytest.approx(-1 / 128, abs=1e-15)


@pytest.mark.parametrize("family", ["uniform", "triangular"])
@pytest.mark.parametrize("n", [8, 32, 64])
def test_discrete_mass_is_exactly_one(family, n):
    kern = discretize_kernel(KernelSpec(family=family), n)
    assert kern.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(kern.weights > 0)


def test_moments_analytic_and_discrete(uniform01, uniform11, triangular01):
    assert kernel_moment(uniform01, 0) == 1.0
    assert kernel_moment(uniform11, 1)[0] == pytest.approx(1.0)
    m2 = kernel_moment(triangular01, 2, discrete=True, n=64)[0, 0]
    assert abs(m2 - 1 / 6) < 1.0 / 64 ** 2
    assert kernel_moment(uniform01, 1, discrete=True, n=64)[0] == pytest.approx(0.0, abs=1e-16)


def test_periodized_uniform_order_zero_is_one(uniform01):
    pk = periodized_moment_kernel(uniform01, 64, 0)
    np.testing.assert_allclose(pk.values, 1.0, atol=1e-14)
    assert pk.torus_mean() == pytest.approx(1.0, abs=1e-15)


def test_periodized_uniform_higher_orders(uniform01):
    n = 64
    z = np.arange(1, n) / n
    pk1 = periodized_moment_kernel(uniform01, n, 1)
    np.testing.assert_allclose(pk1.values[1:, 0], z - 0.5, atol=1e-14)
    pk2 = periodized_moment_kernel(uniform01, n, 2)
    np.testing.assert_allclose(pk2.values[1:, 0, 0], z ** 2 - z + 0.5, atol=1e-14)
    assert pk2.torus_mean()[0, 0] == pytest.approx(1 / 3, abs=1e-3)


@pytest.mark.parametrize("spec", [
    KernelSpec(family="uniform", center=0.3, half_width=0.7),
    KernelSpec(family="triangular", center=-0.2, half_width=1.3),
    KernelSpec(family="truncated_gaussian", half_width=1.0, sigma=0.4),
])
def test_torus_means_match_discrete_moments(spec):
    n = 32
    for order in (0, 1, 2):
        pk = periodized_moment_kernel(spec, n, order)
        expected = 1.0 if order == 0 else kernel_moment(spec, order, discrete=True, n=n)
        np.testing.assert_allclose(pk.torus_mean(), expected, atol=1e-13)


def test_two_dimensional_product_kernel():
    spec = KernelSpec(family="uniform", dimension=2, center=[0.0, 0.5], half_width=0.5)
    pk0 = periodized_moment_kernel(spec, 8, 0)
    assert pk0.values.shape == (64,)
    assert pk0.torus_mean() == pytest.approx(1.0, abs=1e-14)
    m1 = kernel_moment(spec, 1, discrete=True, n=8)
    np.testing.assert_allclose(m1, [0.0, 0.5], atol=1e-14)
