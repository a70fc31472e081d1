import math

import numpy as np
import pytest

from t3k.core.errors import ClassificationError, ResonanceError
from t3k.physics.dynamics import (
    envelope_maxima,
    evolve,
    p_t3k_three_level,
    propagate,
    splitting_from_spectrum,
)
from t3k.physics.hamiltonian import (
    BasisState,
    HermitianMatrix,
    Parity,
    Truncation,
    build_hamiltonian,
    three_level_preset,
)
from t3k.physics.kernel import build_kernel, project_kernel, two_mode_evolve
from t3k.physics.modes import coupling_overlap
from tests.conftest import make_params


def _three_level_at_ratio(ratio: float, Delta: float = 4.0):
    """Parameters whose 3-level model has g_L1 / delta_1 = ratio."""
    unit = make_params(Delta=Delta)
    delta = float(unit.detuning([1])[0])
    g_tilde = ratio * delta
    g0 = g_tilde / coupling_overlap(unit, "L", 1)
    return make_params(Delta=Delta, g0=g0), g_tilde, delta


def test_decoupled_atom_never_crosses():
    params = make_params(g0=0.0)
    H = build_hamiltonian(params, Truncation(j_max=4, n_max=2))
    series = evolve(H, BasisState.a("L"), np.linspace(0.0, 50.0, 101))
    assert np.max(series.p_t3k) < 1e-24
    np.testing.assert_allclose(series.p_left, 1.0, atol=1e-14)
    np.testing.assert_allclose(series.norm, 1.0, atol=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_norm_and_parity_conservation(seed):
    rng = np.random.default_rng(seed)
    params = make_params(
        ell=rng.uniform(0.5, 2.0),
        d=rng.uniform(0.2, 2.0),
        Delta=rng.uniform(2.0, 6.0),
        g0=rng.uniform(0.01, 0.1),
    )
    H = build_hamiltonian(params, Truncation(j_max=6, n_max=2))
    t = np.linspace(0.0, 200.0, 1000)
    series = evolve(H, BasisState.a("L"), t)
    assert np.max(np.abs(series.norm - 1.0)) < 1e-12
    assert np.all(series.p_t3k <= 1.0 + 1e-12)

    odd = H.sector(Parity.ODD)
    psi0 = np.zeros(H.dimension, dtype=complex)
    psi0[H.index(BasisState.a("L"))] = 1.0
    for time in t[::111]:
        psi = propagate(H, psi0, time)
        assert np.sum(np.abs(psi[odd]) ** 2) < 1e-12
        assert abs(np.vdot(psi, psi).real - 1.0) < 1e-12


def test_propagate_is_time_reversible(params):
    H = build_hamiltonian(params, Truncation(j_max=4, n_max=2))
    psi0 = np.zeros(H.dimension, dtype=complex)
    psi0[0] = 1.0
    back = propagate(H, propagate(H, psi0, 37.5), -37.5)
    np.testing.assert_allclose(back, psi0, atol=1e-12)


def test_three_level_exact_vs_lowest_order():
    ratio = 1e-2
    params, g_tilde, delta = _three_level_at_ratio(ratio)
    H = three_level_preset(params)
    slow_period = math.pi * delta / g_tilde**2
    t = np.linspace(0.0, slow_period, 4001)
    exact = evolve(H, BasisState.a("L"), t).p_t3k
    estimate = p_t3k_three_level(g_tilde, delta, t)
    assert np.max(np.abs(exact - estimate)) < 30.0 * ratio**2


def test_lowest_order_starts_quartically():
    g, delta, t = 0.1, 5.0, 1e-3
    assert p_t3k_three_level(g, delta, t) == pytest.approx(g**4 * t**4 / 4.0, rel=1e-2)
    assert p_t3k_three_level(g, delta, 0.0) == 0.0


def test_lowest_order_needs_detuning():
    with pytest.raises(ResonanceError):
        p_t3k_three_level(0.1, 0.0, [1.0])


def test_three_level_splitting_is_exact():
    params, g_tilde, delta = _three_level_at_ratio(0.05)
    H = three_level_preset(params)
    expected = math.sqrt(delta**2 / 4.0 + 2.0 * g_tilde**2) - delta / 2.0
    assert splitting_from_spectrum(H) == pytest.approx(expected, rel=1e-9)


def test_three_level_splitting_rwa_vanishes(params):
    H = three_level_preset(params, rwa=True)
    assert splitting_from_spectrum(H) == pytest.approx(0.0, abs=1e-14)


def test_splitting_classification_needs_the_doublet():
    basis = (BasisState.a("L"), BasisState.b(1, 1))
    H = HermitianMatrix(np.diag([0.0, 1.0]), basis)
    with pytest.raises(ClassificationError):
        splitting_from_spectrum(H)


def test_strong_mixing_fails_classification():
    params = make_params(g0=40.0)
    H = three_level_preset(params)
    with pytest.raises(ClassificationError):
        splitting_from_spectrum(H, threshold=0.9)


def test_envelope_maxima_refines_peaks():
    t = np.linspace(0.0, 10.0, 801)
    p = np.sin(1.3 * t) ** 2
    t_peak, p_peak = envelope_maxima(t, p)
    expected = (np.arange(len(t_peak)) + 0.5) * math.pi / 1.3
    np.testing.assert_allclose(t_peak, expected, atol=1e-4)
    np.testing.assert_allclose(p_peak, 1.0, atol=1e-6)


def test_evolve_rejects_bad_grids(params):
    H = three_level_preset(params)
    with pytest.raises(ValueError):
        evolve(H, BasisState.a("L"), [1.0, 0.5])
    with pytest.raises(ValueError):
        evolve(H, BasisState.a("L"), [-1.0, 0.0])


def test_envelope_follows_the_kernel_two_mode_model():
    g0, Delta = 0.1, 4.0
    params = make_params(g0=g0, Delta=Delta)
    H = build_hamiltonian(params, Truncation(j_max=12, n_max=1, parity_reduced=True))
    kernel = build_kernel(params, j_max=12)
    pi_ss = project_kernel(kernel, "S", "S")
    pi_aa = project_kernel(kernel, "A", "A")
    fast_period = 2.0 * math.pi / float(params.detuning([1])[0])
    half_rabi = math.pi / (pi_aa - pi_ss)
    residuals = []
    # 40 samples per fast period in windows spread over half a Rabi period
    for centre in (np.arange(8) + 0.5) / 8.0 * half_rabi:
        t = np.linspace(centre - fast_period, centre + fast_period, 81)
        series = evolve(H, BasisState.a("L"), t)
        _, p_peak = envelope_maxima(t, series.p_t3k)
        running = max(float(np.max(series.p_t3k)), float(np.max(p_peak, initial=0.0)))
        envelope = float(np.max(two_mode_evolve(0.0, pi_ss, pi_aa, t).p))
        residuals.append(abs(running - envelope))
    # measured about 3e-3, above (g0 / Delta)^2 through the fourth-order shift of delta E
    assert max(residuals) < 10.0 * (g0 / Delta) ** 2
