import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ep_attractor.algebra import IDENTITY, SIGMA_X, SIGMA_Z, DensityMatrix
from ep_attractor.errors import ConfigurationError
from ep_attractor.passages import (
    EP_DISCRIMINANT_TOL,
    OutsideWindowWarning,
    PassageSpec,
    discriminant,
    ep_times,
    hamiltonian_at,
    hamiltonian_series,
    lab_frame_params,
    omega_sq,
    rotate_density,
    rotate_hamiltonian,
    rotation,
)

JORDAN = np.array([[0, 1], [0, 0]], dtype=complex)


def _solve_lab_params(n, t):
    """Independent route: least squares for (gamma, kappa) in R H_AB R^-1 = H_n."""
    r = rotation()
    rinv = np.linalg.inv(r)
    cols = [(r @ (1j * SIGMA_Z) @ rinv).ravel(), (r @ SIGMA_X @ rinv).ravel()]
    a = np.column_stack(cols)
    target = np.array([[0, 1], [2 * n + 1 - t * t, 0]], dtype=complex).ravel()
    sol, *_ = np.linalg.lstsq(a, target, rcond=None)
    assert np.allclose(a @ sol, target, atol=1e-12)
    return sol.real


def test_omega_sq_examples():
    assert omega_sq(0, 1) == 0
    assert omega_sq(0, -1) == 0
    assert omega_sq(0, 0) == 1
    assert omega_sq(2, 2.0) == 1
    for n in range(1, 8):
        assert omega_sq(n, math.sqrt(2 * n)) == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("n, t, expected", [(0, 0, (0, 1)), (0, 1, (0.5, 0.5)), (1, 0, (-1, 2))])
def test_lab_frame_params(n, t, expected):
    assert lab_frame_params(n, t) == pytest.approx(expected, abs=1e-15)
    assert _solve_lab_params(n, t) == pytest.approx(expected, abs=1e-12)


@given(st.floats(0, 20), st.floats(-10, 10))
def test_lab_frame_params_sum_and_difference(n, t):
    g, k = lab_frame_params(n, t)
    assert g + k == pytest.approx(1, abs=1e-12)
    assert k - g == pytest.approx(omega_sq(n, t), abs=1e-12 * (1 + t * t + n))


def test_hamiltonian_examples():
    np.testing.assert_array_equal(hamiltonian_at(PassageSpec.rotated_diabatic(0, -4, 4), 0.0), SIGMA_X)
    np.testing.assert_array_equal(hamiltonian_at(PassageSpec.rotated_diabatic(0, -4, 4), 1.0), JORDAN)
    np.testing.assert_array_equal(hamiltonian_at(PassageSpec.linear_adiabatic(-6, 0), 0.0), SIGMA_X)
    np.testing.assert_array_equal(
        hamiltonian_at(PassageSpec.quadratic_adiabatic(-6, 6), 2.0), -3j * SIGMA_Z + SIGMA_X
    )
    spec = PassageSpec.constant_kappa(0.7, (0.5, -1.0, 0.25), -2, 2)
    np.testing.assert_allclose(hamiltonian_at(spec, 1.0), -0.25j * SIGMA_Z + 0.7 * SIGMA_X, atol=1e-15)


def test_hamiltonian_outside_window_is_flagged():
    spec = PassageSpec.linear_adiabatic(-6, 0)
    with pytest.warns(OutsideWindowWarning):
        h = hamiltonian_at(spec, 2.0)
    np.testing.assert_array_equal(h, 2j * SIGMA_Z + SIGMA_X)


def test_hamiltonian_series_matches_pointwise():
    for spec in (
        PassageSpec.rotated_diabatic(1, -3, 3),
        PassageSpec.lab_diabatic(2.5, -3, 3),
        PassageSpec.quadratic_adiabatic(-3, 3),
        PassageSpec.constant_kappa(2.0, (0, 1), -3, 3),
    ):
        ts = np.linspace(-3, 3, 13)
        series = hamiltonian_series(spec, ts)
        for t, h in zip(ts, series):
            np.testing.assert_array_equal(h, hamiltonian_at(spec, t))


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        PassageSpec("spiral", 0, 1)
    with pytest.raises(ConfigurationError):
        PassageSpec.rotated_diabatic(0, 1, 1)
    with pytest.raises(ConfigurationError):
        PassageSpec.rotated_diabatic(-1, 0, 1)
    with pytest.raises(ConfigurationError):
        PassageSpec.constant_kappa(0.0, (0, 1), 0, 1)
    with pytest.raises(ConfigurationError):
        PassageSpec.from_dict({"family": "linear-adiabatic", "t_start": 0, "t_end": 1, "colour": 3})


def test_spec_round_trip():
    for spec in (
        PassageSpec.rotated_diabatic(1, -4, 4),
        PassageSpec.lab_diabatic(0.5, -4, 4),
        PassageSpec.linear_adiabatic(-6, 0),
        PassageSpec.constant_kappa(1.5, (0.1, 1.0, 0.0), -2, 2),
    ):
        assert PassageSpec.from_dict(spec.to_dict()) == spec


def test_rotation_is_unitary():
    r = rotation()
    np.testing.assert_allclose(r @ r.conj().T, IDENTITY, atol=1e-15)
    half = DensityMatrix(IDENTITY / 2)
    np.testing.assert_allclose(rotate_density(half).rho, IDENTITY / 2, atol=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_rotate_lab_form(g, k):
    expected = np.array([[0, g + k], [k - g, 0]])
    np.testing.assert_allclose(rotate_hamiltonian(1j * g * SIGMA_Z + k * SIGMA_X), expected, atol=1e-12)


@given(st.floats(0, 10), st.floats(-6, 6))
def test_frame_consistency_of_hamiltonians(n, t):
    lab = hamiltonian_at(PassageSpec.lab_diabatic(n, -6, 6), t)
    rot = hamiltonian_at(PassageSpec.rotated_diabatic(n, -6, 6), t)
    np.testing.assert_allclose(rotate_hamiltonian(lab), rot, rtol=0, atol=1e-12 * (1 + n + t * t))


def test_ep_times_examples():
    rep = ep_times(PassageSpec.rotated_diabatic(0, -4, 4))
    assert rep.times == (-1.0, 1.0)
    assert [r[2] for r in rep.regimes] == ["broken", "exact", "broken"]

    rep = ep_times(PassageSpec.linear_adiabatic(-6, 0))
    assert rep.times == pytest.approx((-1.0,), abs=1e-10)

    rep = ep_times(PassageSpec.quadratic_adiabatic(-6, 6))
    assert rep.times == pytest.approx((-math.sqrt(2), 0.0, math.sqrt(2)), abs=1e-10)
    # t=0 is a tangency: the exact phase sits on both sides
    assert [r[2] for r in rep.regimes] == ["broken", "exact", "exact", "broken"]


def test_ep_on_grid_free_window():
    # window chosen so no grid point lands on the roots
    rep = ep_times(PassageSpec.quadratic_adiabatic(-5.9997, 5.9993))
    assert rep.times == pytest.approx((-math.sqrt(2), 0.0, math.sqrt(2)), abs=1e-10)


@pytest.mark.parametrize(
    "spec",
    [
        PassageSpec.rotated_diabatic(0, -4, 4),
        PassageSpec.rotated_diabatic(3, -4, 4),
        PassageSpec.lab_diabatic(1, -4, 4),
        PassageSpec.linear_adiabatic(-6, 6),
        PassageSpec.quadratic_adiabatic(-6, 6),
        PassageSpec.constant_kappa(0.5, (0.2, 1.0, 0.0), -3, 3),
        PassageSpec.constant_kappa(1.0, (0.0, 0.0, 1.0), -3, 3),
    ],
)
def test_ep_discriminant_vanishes_and_eigenvector(spec):
    rep = ep_times(spec)
    assert rep.times
    for t, v in zip(rep.times, rep.eigenvectors):
        assert abs(discriminant(spec, t)) <= EP_DISCRIMINANT_TOL
        h = hamiltonian_at(spec, t)
        # defective: H v = 0, H != 0, and H^2 = 0 up to rounding
        np.testing.assert_allclose(h @ v, 0, atol=1e-9)
        np.testing.assert_allclose(h @ h, 0, atol=1e-9)
    for a, b, label in rep.regimes:
        d = discriminant(spec, 0.5 * (a + b))
        eig = np.linalg.eigvals(hamiltonian_at(spec, 0.5 * (a + b)))
        if label == "exact":
            assert d > 0 and np.allclose(eig.imag, 0, atol=1e-9)
        else:
            assert d < 0 and np.allclose(eig.real, 0, atol=1e-9)


def test_diabatic_ep_is_jordan_block():
    for n in (0, 4, 12):
        spec = PassageSpec.rotated_diabatic(n, -6, 6)
        for t, v in zip(ep_times(spec).times, ep_times(spec).eigenvectors):
            np.testing.assert_array_equal(hamiltonian_at(spec, t), JORDAN)
            np.testing.assert_array_equal(v, [1, 0])
    for n in (1, 2, 3, 5):
        spec = PassageSpec.rotated_diabatic(n, -6, 6)
        for t in ep_times(spec).times:
            np.testing.assert_allclose(hamiltonian_at(spec, t), JORDAN, atol=4 * (2 * n + 1) * np.finfo(float).eps)


@pytest.mark.parametrize(
    "spec",
    [PassageSpec.rotated_diabatic(2, -5, 5), PassageSpec.lab_diabatic(1, -5, 5), PassageSpec.quadratic_adiabatic(-6, 6)],
)
def test_ep_times_symmetric(spec):
    times = np.array(ep_times(spec).times)
    np.testing.assert_allclose(np.sort(-times), times, atol=1e-10)


def test_no_ep_in_window():
    rep = ep_times(PassageSpec.rotated_diabatic(0, -0.5, 0.5))
    assert rep.times == ()
    assert rep.regimes == ((-0.5, 0.5, "exact"),)


def test_tangency_off_the_origin():
    # gamma = 1 + (t - 0.3)^2 touches |gamma| = kappa only at t = 0.3
    spec = PassageSpec.constant_kappa(1.0, (1.09, -0.6, 1.0), -2, 2)
    rep = ep_times(spec)
    assert rep.times == pytest.approx((0.3,), abs=1e-10)
    assert [r[2] for r in rep.regimes] == ["broken", "broken"]


def test_ep_search_is_window_independent():
    rep = ep_times(PassageSpec.quadratic_adiabatic(-1e100, 1e100))
    assert rep.times == pytest.approx((-math.sqrt(2), 0.0, math.sqrt(2)), abs=1e-10)
    assert ep_times(PassageSpec.constant_kappa(2.0, (0.5,), -3, 3)).times == ()
