import math

import numpy as np
import pytest
from scipy import integrate

from t3k.core.errors import ConvergenceError, ProfileError, ResonanceError
from t3k.physics.kernel import (
    TwoModeState,
    a_mode_on_grid,
    build_kernel,
    cayley_evolve,
    grid_evolve,
    kernel_eigenmodes,
    kernel_spectrum,
    project_kernel,
    projected_hamiltonian,
    two_mode_evolve,
    uniform_grid,
    well_aligned_grid,
    well_grid_hamiltonian,
)
from t3k.physics.modes import Geometry, ModeId, SampledProfile, Species, mode_function
from t3k.physics.selfenergy import self_energy_matrix
from tests.conftest import make_params


@pytest.fixture(scope="module")
def kernel():
    return build_kernel(make_params())


def test_projection_matches_mode_sum(kernel):
    expected = self_energy_matrix(kernel.params, kernel.j_max, basis="LR")
    assert project_kernel(kernel, "L", "L") == pytest.approx(expected[0, 0], rel=1e-6)
    assert project_kernel(kernel, "L", "R") == pytest.approx(expected[0, 1], rel=1e-6)
    assert project_kernel(kernel, "R", "R") == pytest.approx(expected[1, 1], rel=1e-6)


def test_projection_in_parity_basis(kernel):
    expected = self_energy_matrix(kernel.params, kernel.j_max, basis="SA")
    pi_ss = project_kernel(kernel, "S", "S")
    pi_aa = project_kernel(kernel, "A", "A")
    assert pi_ss == pytest.approx(expected[0, 0], rel=1e-6)
    assert pi_aa == pytest.approx(expected[1, 1], rel=1e-6)
    assert abs(project_kernel(kernel, "S", "A")) < 1e-10 * abs(pi_ss)


def test_kernel_is_symmetric_and_negative_definite_on_its_range(kernel):
    np.testing.assert_array_equal(kernel.values, kernel.values.T)
    top = kernel_spectrum(kernel, 2)
    delta = kernel.params.detuning([1, 2])
    params = kernel.params
    np.testing.assert_allclose(top, -params.hbar * params.g_tilde0**2 / delta, rtol=1e-6)


def test_splitting_is_shift_invariant():
    t = np.linspace(0.0, 40.0, 81)
    base = two_mode_evolve(1.5, -0.25, -0.125, t)
    shifted = two_mode_evolve(1.5, -0.25 + 0.5, -0.125 + 0.5, t)
    np.testing.assert_array_equal(base.p, shifted.p)


def test_two_mode_evolution_is_rabi_like():
    t = np.linspace(0.0, 100.0, 201)
    series = two_mode_evolve(0.3, -0.2, -0.1, t)
    np.testing.assert_allclose(series.p, np.abs(series.c_right) ** 2, atol=1e-14)
    norm = np.abs(series.c_left) ** 2 + np.abs(series.c_right) ** 2
    np.testing.assert_allclose(norm, 1.0, atol=1e-14)
    # full transfer after pi hbar / (Pi_AA - Pi_SS)
    assert two_mode_evolve(0.3, -0.2, -0.1, [math.pi / 0.1]).p[0] == pytest.approx(1.0, abs=1e-14)


def test_two_mode_state_matches_series():
    state = TwoModeState.localized_left(0.7, -0.05, -0.02)
    assert state.c_left == pytest.approx(1.0)
    assert state.c_right == pytest.approx(0.0, abs=1e-16)
    later = state.at(25.0)
    series = two_mode_evolve(0.7, -0.05, -0.02, [25.0])
    assert later.c_left == pytest.approx(complex(series.c_left[0]), abs=1e-14)
    assert abs(later.c_right) ** 2 == pytest.approx(series.p[0], abs=1e-14)


def test_cayley_propagation_matches_two_mode_formula(kernel):
    # a common energy only adds a global phase, so center the doublet
    pi_ll = project_kernel(kernel, "L", "L")
    h = projected_hamiltonian(kernel, -pi_ll)
    pi_ss = project_kernel(kernel, "S", "S")
    pi_aa = project_kernel(kernel, "A", "A")
    t = np.linspace(0.0, math.pi / (pi_aa - pi_ss), 21)
    psi = cayley_evolve(h, [1.0, 0.0], t, steps=64)
    expected = two_mode_evolve(0.0, pi_ss, pi_aa, t).p
    np.testing.assert_allclose(np.abs(psi[:, 1]) ** 2, expected, atol=1e-4)
    np.testing.assert_allclose(np.sum(np.abs(psi) ** 2, axis=1), 1.0, atol=1e-12)


def test_cayley_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        cayley_evolve(np.eye(2), [1.0, 0.0], [1.0, 0.5])


def test_grid_weights_integrate_constants():
    geometry = Geometry(ell=1.0, d=0.7)
    grid = well_aligned_grid(geometry, 33)
    assert np.sum(grid.weights) == pytest.approx(geometry.box_width, rel=1e-12)
    assert np.sum(grid.coarse_weights) == pytest.approx(geometry.box_width, rel=1e-12)
    for edge in (-geometry.outer_edge, -0.35, 0.35, geometry.outer_edge):
        assert np.min(np.abs(grid.x - edge)) < 1e-14
    assert np.all(np.diff(grid.x) > 0)

    uniform = uniform_grid(geometry, 21)
    assert np.sum(uniform.weights) == pytest.approx(geometry.box_width, rel=1e-12)
    assert np.sum(uniform.coarse_weights) == pytest.approx(geometry.box_width, rel=1e-12)


def test_grid_rejects_bad_sizes():
    geometry = Geometry(ell=1.0, d=1.0)
    with pytest.raises(ValueError):
        well_aligned_grid(geometry, 6)
    with pytest.raises(ValueError):
        uniform_grid(geometry, 20)


def test_coarse_grid_fails_projection():
    params = make_params()
    coarse = build_kernel(params, well_aligned_grid(params.geometry, 5))
    with pytest.raises(ConvergenceError):
        project_kernel(coarse, "L", "L")


def test_a_modes_on_grid(params):
    x = np.array([-1.0, 1.0])
    left = a_mode_on_grid(params, x, "L")
    right = a_mode_on_grid(params, x, "R")
    np.testing.assert_allclose(a_mode_on_grid(params, x, "S"), (left + right) / math.sqrt(2))
    with pytest.raises(ValueError):
        a_mode_on_grid(params, x, "B")


def test_kernel_preconditions():
    with pytest.raises(ProfileError):
        build_kernel(make_params(cavity_profile=SampledProfile(x=(-2.0, 2.0), values=(1.0, 1.0))))
    with pytest.raises(ResonanceError):
        build_kernel(make_params(Delta=-4.0 * math.pi**2 / 18.0), j_max=4)
    with pytest.raises(ValueError):
        build_kernel(make_params(), j_max=0)


def test_grid_weights_are_composite_simpson_per_segment():
    geometry = Geometry(ell=1.0, d=0.7)
    grid = well_aligned_grid(geometry, 33)
    f = np.exp(grid.x) * np.cos(3.0 * grid.x)
    edges = [
        int(np.argmin(np.abs(grid.x - x)))
        for x in (-geometry.outer_edge, -0.35, 0.35, geometry.outer_edge)
    ]
    expected = sum(
        integrate.simpson(f[lo : hi + 1], x=grid.x[lo : hi + 1])
        for lo, hi in zip(edges[:-1], edges[1:])
    )
    assert float(grid.weights @ f) == pytest.approx(expected, rel=1e-13)


def test_parity_projections_are_ordered(kernel):
    pi_ss = project_kernel(kernel, "S", "S")
    pi_aa = project_kernel(kernel, "A", "A")
    assert pi_ss < pi_aa < 0.0


def test_decoupled_kernel_vanishes():
    kernel = build_kernel(make_params(g0=0.0), j_max=8)
    assert np.all(kernel.values == 0.0)


def test_kernel_couples_across_the_barrier(kernel):
    half = kernel.params.geometry.d / 2.0
    left = kernel.x < -half
    right = kernel.x > half
    cross = np.max(np.abs(kernel.values[np.ix_(left, right)]))
    assert cross > 1e-3 * np.max(np.abs(kernel.values))


def test_kernel_eigenvectors_are_b_modes(kernel):
    values, vectors = kernel_eigenmodes(kernel, 2)
    np.testing.assert_allclose(values, kernel_spectrum(kernel, 2))
    w = kernel.grid.weights
    for k in range(2):
        phi = mode_function(kernel.params, ModeId(species=Species.B, j=k + 1), kernel.x)
        assert abs(float(np.sum(w * vectors[:, k] * phi))) == pytest.approx(1.0, abs=1e-6)
        assert float(np.sum(w * vectors[:, k] ** 2)) == pytest.approx(1.0, rel=1e-12)


def test_tail_bound_covers_dropped_modes():
    params = make_params()
    grid = well_aligned_grid(params.geometry, 33)
    truncated = build_kernel(params, grid, j_max=16)
    reference = build_kernel(params, grid, j_max=64)
    assert truncated.tail_estimate is not None
    assert np.max(np.abs(truncated.values - reference.values)) <= truncated.tail_estimate


def test_tail_bound_needs_positive_detuning():
    params = make_params(Delta=-4.0)
    assert build_kernel(params, well_aligned_grid(params.geometry, 33), 16).tail_estimate is None


@pytest.fixture(scope="module")
def weak_kernel():
    return build_kernel(make_params(g0=0.1), j_max=16)


def test_grid_propagation_matches_two_mode_model(weak_kernel):
    pi_ss = project_kernel(weak_kernel, "S", "S")
    pi_aa = project_kernel(weak_kernel, "A", "A")
    t = np.linspace(0.0, math.pi / (pi_aa - pi_ss), 9)
    series = grid_evolve(weak_kernel, t)
    expected = two_mode_evolve(0.0, pi_ss, pi_aa, t).p
    np.testing.assert_allclose(series.p_right, expected, atol=2e-3)
    np.testing.assert_allclose(series.p_left + series.p_right, 1.0, atol=2e-3)
    np.testing.assert_allclose(series.norm, 1.0, atol=1e-10)
    assert series.p_right[-1] > 0.99


def test_well_grid_hamiltonian_structure(weak_kernel):
    H, nodes = well_grid_hamiltonian(weak_kernel)
    np.testing.assert_array_equal(H, H.T)
    half = len(nodes) // 2
    assert np.all(weak_kernel.x[nodes[:half]] < 0.0) and np.all(weak_kernel.x[nodes[half:]] > 0.0)
    # the wells only talk through the kernel
    assert np.max(np.abs(H[:half, half:])) > 0.0
    decoupled, _ = well_grid_hamiltonian(build_kernel(make_params(g0=0.0), j_max=4))
    assert np.all(decoupled[:half, half:] == 0.0)


def test_grid_propagation_needs_well_edges_on_the_grid():
    params = make_params(d=0.7)
    kernel = build_kernel(params, uniform_grid(params.geometry, 21), j_max=4)
    with pytest.raises(ValueError):
        grid_evolve(kernel, [0.0, 1.0])
