import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homogen.models.coefficient import CoefficientSpec
from homogen.models.simulation import BoxGrid, EvolutionState
from homogen.services.effective_service import average_theta, cumulative_theta
from homogen.services.kernel_service import discretize_kernel
from homogen.services.simulate_service import (
    BoxOperator,
    apply_L_eps,
    boundary_mass,
    evolve_epsilon,
    gaussian_initial,
    shift_field,
    solve_heat_multiplier,
    sup_l2_error,
)
from homogen.tests.conftest import term
from homogen.utils.errors import CFLViolation, CheckpointMismatch, GridMismatch, NotPSD

SMALL = BoxGrid(length=2, q=4, n_cell=8)


def _state(grid, snapshots, checkpoints):
    return EvolutionState(spacing=grid.h, length=grid.length, t=checkpoints[-1], checkpoints=list(checkpoints),
                          snapshots=np.asarray(snapshots, dtype=float))


def test_box_grid_layout():
    grid = BoxGrid(length=8, q=16, n_cell=32)
    assert grid.eps == 1 / 16
    assert grid.n_box == 4096
    assert grid.h == pytest.approx(grid.eps / 32)
    assert grid.x[0] == -4.0
    assert grid.cell_index[grid.n_box // 2] == 0
    np.testing.assert_allclose(grid.cell_index / 32, np.mod(grid.x / grid.eps, 1.0), atol=1e-9)
    with pytest.raises(ValueError):
        BoxGrid(length=1, q=1, n_cell=5)


def test_constant_field_is_stationary(triangular01, mu_arrival_oscillating):
    u = np.full(SMALL.n_box, 3.0)
    assert np.abs(apply_L_eps(u, 0.37, SMALL, triangular01, mu_arrival_oscillating, 1.5)).max() < 1e-12


def test_harmonic_multiplier(uniform01, mu_one):
    kern = discretize_kernel(uniform01, SMALL.n_cell)
    for mode in (1, 3, 5):
        kappa = mode / SMALL.length
        u = np.cos(2 * np.pi * kappa * SMALL.x)
        char = np.sum(kern.weights * np.cos(2 * np.pi * kappa * SMALL.eps * kern.nodes[:, 0]))
        expected = (char - 1.0) / SMALL.eps ** 2 * u
        np.testing.assert_allclose(apply_L_eps(u, 0.0, SMALL, kern, mu_one, 1.0), expected, atol=1e-11)


def test_schur_bound(triangular01, mu_arrival_oscillating):
    rng = np.random.default_rng(7)
    op = BoxOperator(SMALL, triangular01, mu_arrival_oscillating, 0.5)
    for t in rng.uniform(0, 1, size=5):
        u = rng.normal(size=SMALL.n_box)
        bound = 2 * mu_arrival_oscillating.mu_plus / SMALL.eps ** 2 * np.linalg.norm(u)
        assert np.linalg.norm(op.apply(u, t)) <= bound


def test_grid_mismatch(uniform01, mu_one):
    with pytest.raises(GridMismatch):
        apply_L_eps(np.zeros(SMALL.n_box), 0.0, SMALL, discretize_kernel(uniform01, 16), mu_one, 1.0)
    with pytest.raises(GridMismatch):
        apply_L_eps(np.zeros(10), 0.0, SMALL, uniform01, mu_one, 1.0)


def test_euler_matches_exponential(uniform01, mu_one):
    kern = discretize_kernel(uniform01, SMALL.n_cell)
    kappa = 1 / SMALL.length
    u0 = np.cos(2 * np.pi * kappa * SMALL.x)
    char = np.sum(kern.weights * np.cos(2 * np.pi * kappa * SMALL.eps * kern.nodes[:, 0]))
    rate = (char - 1.0) / SMALL.eps ** 2
    state = evolve_epsilon(u0, 1.0, SMALL, kern, mu_one, 1.0, [0.5, 1.0], dt=1e-3)
    for t, snapshot in zip(state.checkpoints, state.snapshots):
        np.testing.assert_allclose(snapshot, np.exp(rate * t) * u0, atol=1e-3)
    assert state.t == 1.0
    assert state.steps == 1000


def test_positivity_and_sup_norm(triangular01, mu_arrival_oscillating):
    grid = BoxGrid(length=4, q=4, n_cell=8)
    u0 = gaussian_initial(grid, 0.5)
    state = evolve_epsilon(u0, 0.5, grid, triangular01, mu_arrival_oscillating, 1.5, [0.25, 0.5])
    assert state.positivity_ok and state.max_principle_ok
    assert np.all(np.diff(state.sup_history) <= 1e-13 * state.sup_history[0])
    assert state.snapshots.min() >= 0.0
    assert state.dt <= 0.9 * grid.eps ** 2


def test_mass_conserved_for_symmetric_dynamics(triangular01):
    mu = CoefficientSpec(terms=[term(0.3, xi=("cos", 1), eta=("cos", 1), s=("sin", 1))])
    grid = BoxGrid(length=4, q=4, n_cell=8)
    state = evolve_epsilon(gaussian_initial(grid, 0.5), 0.2, grid, triangular01, mu, 1.0, [0.2])
    assert np.abs(np.diff(state.mass_history)).max() <= 1e-12


def test_cfl_violation(uniform01, mu_one):
    with pytest.raises(CFLViolation):
        evolve_epsilon(np.zeros(SMALL.n_box), 1.0, SMALL, uniform01, mu_one, 1.0, [1.0], dt=2 * SMALL.eps ** 2)
    with pytest.raises(CFLViolation):
        evolve_epsilon(np.zeros(SMALL.n_box), 1.0, SMALL, uniform01, mu_one, 1.0, [1.0], cfl_fraction=1.5)


def test_cfl_fraction_sets_step(uniform01, mu_one):
    u0 = gaussian_initial(SMALL, 0.3)
    coarse = evolve_epsilon(u0, 0.5, SMALL, uniform01, mu_one, 1.0, [0.5])
    fine = evolve_epsilon(u0, 0.5, SMALL, uniform01, mu_one, 1.0, [0.5], cfl_fraction=0.1)
    assert fine.dt == pytest.approx(coarse.dt / 9, rel=1e-12)
    assert fine.steps >= 9 * coarse.steps - 9


def test_checkpoints_must_lie_in_horizon(uniform01, mu_one):
    with pytest.raises(CheckpointMismatch):
        evolve_epsilon(np.zeros(SMALL.n_box), 1.0, SMALL, uniform01, mu_one, 1.0, [1.5])


def test_heat_multiplier_gaussian():
    grid = BoxGrid(length=16, q=1, n_cell=16)
    Theta = 1 / 6
    state = solve_heat_multiplier(np.exp(-grid.x ** 2), lambda t: np.array([[Theta * t]]), grid, [0.5, 1.0])
    for t, u in zip(state.checkpoints, state.snapshots):
        spread = 1 + 4 * Theta * t
        np.testing.assert_allclose(u, spread ** -0.5 * np.exp(-grid.x ** 2 / spread), atol=1e-8)


def test_heat_multiplier_identity_and_psd():
    grid = BoxGrid(length=16, q=1, n_cell=16)
    u0 = np.exp(-grid.x ** 2)
    state = solve_heat_multiplier(u0, lambda t: np.zeros((1, 1)), grid, [1.0])
    np.testing.assert_allclose(state.snapshots[0], u0, atol=1e-14)
    with pytest.raises(NotPSD):
        solve_heat_multiplier(u0, lambda t: np.array([[-t]]), grid, [1.0])
    with pytest.raises(NotPSD):
        solve_heat_multiplier(u0, lambda t: np.array([[1.0 / t]]), grid, [0.5, 1.0])


def test_time_modulated_rho_uses_effective_time():
    grid = BoxGrid(length=16, q=1, n_cell=16)
    s = np.arange(16) / 16
    Theta0 = 1 / 6
    tensors = average_theta(((1 + 0.5 * np.sin(2 * np.pi * s)) * Theta0)[:, None, None])
    alpha, eps = 0.5, 1 / 16
    scale = eps ** alpha
    checkpoints = [0.1, 0.3, 1.0]
    state = solve_heat_multiplier(np.exp(-grid.x ** 2), cumulative_theta(tensors, alpha, eps), grid, checkpoints)
    for t, u in zip(checkpoints, state.snapshots):
        tau = t + scale * (1 - np.cos(2 * np.pi * t / scale)) / (4 * np.pi)
        spread = 1 + 4 * Theta0 * tau
        np.testing.assert_allclose(u, spread ** -0.5 * np.exp(-grid.x ** 2 / spread), atol=1e-10)


def test_shift_examples():
    grid = BoxGrid(length=8, q=2, n_cell=8)
    u = gaussian_initial(grid, 0.7)
    np.testing.assert_allclose(shift_field(u, grid.length, grid), u, atol=1e-12)
    np.testing.assert_allclose(shift_field(u, grid.h, grid), np.roll(u, 1), atol=1e-12)
    np.testing.assert_allclose(shift_field(shift_field(u, 0.37, grid), -0.37, grid), u, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-50.0, 50.0), b=st.floats(-50.0, 50.0))
def test_shift_composition(a, b):
    grid = BoxGrid(length=8, q=2, n_cell=8)
    u = gaussian_initial(grid, 0.7, center=0.3)
    np.testing.assert_allclose(shift_field(shift_field(u, a, grid), b, grid), shift_field(u, a + b, grid), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-50.0, 50.0), b=st.floats(-50.0, 50.0), seed=st.integers(0, 2 ** 32 - 1))
def test_shift_composition_for_rough_fields(a, b, seed):
    grid = BoxGrid(length=8, q=2, n_cell=8)
    u = np.random.default_rng(seed).standard_normal(grid.n_box)
    np.testing.assert_allclose(shift_field(shift_field(u, a, grid), b, grid), shift_field(u, a + b, grid), atol=1e-10)
    alternating = (-1.0) ** np.arange(grid.n_box)
    assert np.abs(shift_field(alternating, a, grid)).max() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-20.0, 20.0))
def test_error_is_translation_invariant(c):
    grid = BoxGrid(length=8, q=2, n_cell=8)
    u = np.stack([gaussian_initial(grid, 0.7), gaussian_initial(grid, 1.0)])
    v = np.stack([gaussian_initial(grid, 0.8, 0.2), gaussian_initial(grid, 1.1, -0.1)])
    a, b = _state(grid, u, [0.5, 1.0]), _state(grid, v, [0.5, 1.0])
    sa = _state(grid, [shift_field(x, c, grid) for x in u], [0.5, 1.0])
    sb = _state(grid, [shift_field(x, c, grid) for x in v], [0.5, 1.0])
    assert sup_l2_error(sa, sb) == pytest.approx(sup_l2_error(a, b), abs=1e-12)


def test_sup_l2_error_examples():
    grid = BoxGrid(length=8, q=2, n_cell=8)
    u = np.stack([gaussian_initial(grid, 0.7), gaussian_initial(grid, 1.0)])
    a = _state(grid, u, [0.5, 1.0])
    assert sup_l2_error(a, a) == 0.0
    b = _state(grid, u + 0.25, [0.5, 1.0])
    assert sup_l2_error(a, b) == pytest.approx(0.25 * np.sqrt(8.0), rel=1e-12)
    single_a = _state(grid, u[:1], [0.5])
    single_b = _state(grid, u[1:], [0.5])
    plain = np.sqrt(grid.h * np.sum((u[0] - u[1]) ** 2))
    assert sup_l2_error(single_a, single_b) == pytest.approx(plain, rel=1e-14)
    with pytest.raises(CheckpointMismatch):
        sup_l2_error(a, single_a)


def test_boundary_mass_of_narrow_gaussian():
    grid = BoxGrid(length=8, q=2, n_cell=8)
    assert boundary_mass(gaussian_initial(grid, 0.5), grid) < 1e-8
    assert boundary_mass(np.ones(grid.n_box), grid) == pytest.approx(33 / 16)
