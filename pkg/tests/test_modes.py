import math

import numpy as np
import pydantic
import pytest
from scipy import integrate

from t3k.core.errors import ProfileError
from t3k.physics.modes import (
    ConstantProfile,
    Geometry,
    ModeId,
    SampledProfile,
    Side,
    Species,
    coupling_overlap,
    coupling_table,
    mode_frequency,
    mode_function,
)
from tests.conftest import make_params


@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("d", [0.5, 1.0, 2.0])
def test_closed_overlap_matches_quadrature(ell, d):
    params = make_params(ell=ell, d=d)
    for j in range(1, 51):
        closed = coupling_overlap(params, Side.L, j, method="closed")
        quad = coupling_overlap(params, Side.L, j, method="quadrature", atol=1e-14)
        assert abs(closed - quad) <= 1e-10 * abs(closed) + 1e-13, (j, closed, quad)


def test_degenerate_branch_value():
    params = make_params(ell=1.0, d=1.0)
    # j l = 2l + d at j = 3
    assert coupling_overlap(params, "L", 3) == pytest.approx(math.sqrt(1.0 / 3.0), rel=1e-12)
    assert coupling_overlap(params, "L", 3, method="quadrature") == pytest.approx(
        math.sqrt(1.0 / 3.0), rel=1e-10
    )


def test_first_coupling_reference_value(params):
    assert coupling_overlap(params, "L", 1) == pytest.approx(0.358097, rel=1e-5)


def test_right_well_sign_rule(params):
    g_left, g_right = coupling_table(params, 12)
    for j in range(1, 13):
        assert g_right[j - 1] == (-1) ** (j + 1) * g_left[j - 1]
        assert coupling_overlap(params, Side.R, j) == pytest.approx(g_right[j - 1], abs=1e-15)


def test_right_well_quadrature_agrees_with_sign_rule(params):
    for j in (1, 2, 4, 5):
        quad = coupling_overlap(params, Side.R, j, method="quadrature")
        expected = (-1) ** (j + 1) * coupling_overlap(params, Side.L, j)
        assert quad == pytest.approx(expected, rel=1e-10)


def test_coupling_scales_with_g0():
    small = coupling_table(make_params(g0=0.5), 6)[0]
    large = coupling_table(make_params(g0=1.0), 6)[0]
    np.testing.assert_allclose(large, 2.0 * small, rtol=1e-15)


@pytest.mark.parametrize(
    "mode",
    [
        ModeId(species=Species.A_LEFT, j=1),
        ModeId(species=Species.A_RIGHT, j=2),
        ModeId(species=Species.B, j=5),
    ],
)
def test_mode_functions_are_normalised(params, mode):
    lo, hi = params.geometry.support(mode.species)
    norm, _ = integrate.quad(
        lambda x: float(mode_function(params, mode, x)) ** 2, lo, hi, limit=200
    )
    assert norm == pytest.approx(1.0, rel=1e-10)


def test_mode_function_vanishes_outside_support(params):
    x = np.array([-1.2, -0.6, 0.0, 0.6, 1.2])
    phi = mode_function(params, ModeId(species=Species.A_LEFT), x)
    assert np.all(phi[2:] == 0.0)
    assert phi[1] > 0.0


def test_mode_function_rejects_points_outside_walls(params):
    with pytest.raises(ValueError):
        mode_function(params, ModeId(species=Species.B), [1.6])


def test_mode_frequency(params):
    lb = params.geometry.box_width
    b3 = mode_frequency(params, ModeId(species=Species.B, j=3))
    assert b3 == pytest.approx(params.Omega_b + math.pi**2 * 9 / (2.0 * lb**2), rel=1e-14)
    assert mode_frequency(params, ModeId(species=Species.A_RIGHT)) == pytest.approx(params.omega_a)


def test_from_detuning_round_trip():
    params = make_params(Delta=-2.5, omega_c=3.0, Omega_a=0.25)
    assert params.Delta == pytest.approx(-2.5, rel=1e-14)
    assert params.omega_a == pytest.approx(0.25 + math.pi**2 / 2.0, rel=1e-14)
    assert params.detuning([1])[0] == pytest.approx(-2.5 + math.pi**2 / 18.0, rel=1e-12)


def test_geometry_rejects_non_positive_lengths():
    with pytest.raises(pydantic.ValidationError):
        Geometry(ell=1.0, d=-0.5)
    with pytest.raises(pydantic.ValidationError):
        Geometry(ell=0.0, d=1.0)


def test_j_must_be_positive(params):
    with pytest.raises(ValueError):
        coupling_overlap(params, "L", 0)


def test_flat_sampled_profile_matches_constant_profile():
    flat = SampledProfile(x=(-2.0, 0.0, 2.0), values=(1.0, 1.0, 1.0))
    sampled = make_params(cavity_profile=flat)
    constant = make_params(cavity_profile=ConstantProfile())
    for j in (1, 2, 3, 7):
        assert coupling_overlap(sampled, "L", j) == pytest.approx(
            coupling_overlap(constant, "L", j), rel=1e-10, abs=1e-13
        )


def test_sampled_profile_must_cover_the_well():
    short = SampledProfile(x=(0.0, 1.0), values=(1.0, 1.0))
    with pytest.raises(ProfileError):
        coupling_overlap(make_params(cavity_profile=short), "L", 1)


def test_closed_form_needs_constant_profile():
    flat = SampledProfile(x=(-2.0, 2.0), values=(1.0, 1.0))
    params = make_params(cavity_profile=flat)
    with pytest.raises(ProfileError):
        coupling_overlap(params, "L", 1, method="closed")
    with pytest.raises(ProfileError):
        params.g_tilde0


def test_sampled_profile_validation():
    with pytest.raises(pydantic.ValidationError):
        SampledProfile(x=(0.0, 1.0, 0.5), values=(1.0, 1.0, 1.0))
    with pytest.raises(pydantic.ValidationError):
        SampledProfile(x=(0.0, 1.0), values=(1.0,))


def test_b_modes_are_orthonormal(params):
    edge = params.geometry.outer_edge
    phi = [ModeId(species=Species.B, j=j) for j in range(1, 11)]
    gram = np.empty((10, 10))
    for i, first in enumerate(phi):
        for k, second in enumerate(phi):
            gram[i, k], _ = integrate.quad(
                lambda x: float(mode_function(params, first, x) * mode_function(params, second, x)),
                -edge,
                edge,
                epsabs=1e-13,
                epsrel=1e-13,
                limit=200,
            )
    np.testing.assert_allclose(gram, np.eye(10), atol=1e-10)


def test_couplings_decay_as_inverse_square_above_the_degenerate_mode(params):
    # j l = 2l + d at j = 3 for l = d = 1
    ell, lb = params.geometry.ell, params.geometry.box_width
    j = np.arange(4, 201)
    g_left, _ = coupling_table(params, 200)
    k_a, k_j = math.pi / ell, j * math.pi / lb
    envelope = params.g_tilde0 * 2.0 * k_a / (math.sqrt(ell * lb) * (k_j**2 - k_a**2))
    assert np.all(np.abs(g_left[3:]) <= envelope * (1.0 + 1e-12))
    scaled = j**2 * envelope
    assert np.all(np.diff(scaled) < 0)
    limit = params.g_tilde0 * 2.0 * k_a * lb**2 / (math.pi**2 * math.sqrt(ell * lb))
    assert scaled[-1] == pytest.approx(limit, rel=1e-3)
