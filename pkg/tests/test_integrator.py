import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ep_attractor import oracle
from ep_attractor.algebra import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    density_from_bloch,
    density_from_state,
)
from ep_attractor.errors import ConfigurationError, InvalidInputError, NumericalFailure
from ep_attractor.integrator import (
    IntegratorConfig,
    convergence_order,
    euler_step,
    master_rhs,
    propagate,
    propagate_many,
    propagate_state,
    time_grid,
)
from ep_attractor.passages import PassageSpec, rotate_density, rotation

RK4 = IntegratorConfig("rk4", 1e-3)
HERMITIAN = PassageSpec.constant_kappa(1.0, (0.0, 0.0, 0.0), 0.0, 10.0)
GENERIC = density_from_bloch([0.3, -0.5, 0.6])


def _normalized(psi):
    return psi / np.linalg.norm(psi)


def _phase_aligned_error(got, want):
    got, want = _normalized(got), _normalized(want)
    ph = np.vdot(got, want)
    return np.linalg.norm(got * ph / abs(ph) - want)


def test_master_rhs_examples():
    np.testing.assert_array_equal(master_rhs(SIGMA_X, IDENTITY / 2), np.zeros((2, 2)))
    np.testing.assert_allclose(master_rhs(1j * SIGMA_Z, IDENTITY / 2), SIGMA_Z, atol=1e-15)
    jordan = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(master_rhs(jordan, np.diag([0, 1]).astype(complex)), SIGMA_Y, atol=1e-15)


@settings(max_examples=50)
@given(
    st.lists(st.floats(-5, 5), min_size=8, max_size=8),
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
)
def test_master_rhs_preserves_hermiticity_and_matches_split(hvals, a):
    h = np.array(hvals[:4]).reshape(2, 2) + 1j * np.array(hvals[4:]).reshape(2, 2)
    v = np.array(a)
    if np.linalg.norm(v) > 1:
        v = v / np.linalg.norm(v)
    rho = density_from_bloch(v).rho
    out = master_rhs(h, rho)
    assert np.max(np.abs(out - out.conj().T)) <= 1e-14
    hp, hm = (h + h.conj().T) / 2, (h - h.conj().T) / 2
    split = -1j * (hp @ rho - rho @ hp) - 1j * (hm @ rho + rho @ hm)
    np.testing.assert_allclose(out, split, atol=1e-13)


def test_euler_step_examples():
    rho = DensityMatrix(IDENTITY / 2)
    assert euler_step(SIGMA_X, rho, 0.0) is rho
    np.testing.assert_allclose(euler_step(1j * SIGMA_Z, rho, 0.1).rho, np.diag([0.6, 0.4]), atol=1e-15)
    rho = density_from_bloch([0.2, 0.4, -0.1])
    out = euler_step(0.3 * SIGMA_X + 1.1 * SIGMA_Y, rho, 0.05)
    assert out.trace == pytest.approx(rho.trace, abs=1e-15)
    with pytest.raises(InvalidInputError):
        euler_step(SIGMA_X, rho, -0.1)


def test_euler_step_reports_failure_time():
    with pytest.raises(NumericalFailure) as info:
        euler_step(np.array([[1e308j, 0], [0, 0]]), DensityMatrix(IDENTITY / 2), 1e10, t=3.5)
    assert info.value.t == 3.5


def test_config_validation():
    for bad in (dict(dt=0.0), dict(dt=-1e-3), dict(method="leapfrog"), dict(record_stride=0), dict(renormalize_threshold=0)):
        with pytest.raises(ConfigurationError):
            IntegratorConfig(**bad)


def test_time_grid_hits_both_ends():
    times, h = time_grid(PassageSpec.linear_adiabatic(-6, 0), 7e-3)
    assert times[0] == -6 and times[-1] == 0
    np.testing.assert_allclose(np.diff(times), h, rtol=1e-9)


def test_rabi_precession():
    rec = propagate(HERMITIAN, density_from_state([1, 0]), RK4)
    np.testing.assert_allclose(rec.bloch[:, 2], np.cos(2 * rec.times), atol=1e-6)
    np.testing.assert_allclose(rec.bloch[:, 1], -np.sin(2 * rec.times), atol=1e-6)


def test_hermitian_limit_drift():
    rho0 = density_from_bloch([0.1, 0.5, 0.3])
    rec = propagate(HERMITIAN, rho0, RK4)
    assert np.max(np.abs(rec.log_norm)) <= 1e-10
    assert np.max(np.abs(rec.purity - rec.purity[0])) <= 1e-9


def test_state_norm_preserved_for_hermitian():
    traj = propagate_state(HERMITIAN, [0.6, 0.8j], RK4)
    assert np.max(np.abs(traj.log_norm)) <= 1e-10


def test_oracle_agreement_density():
    spec = PassageSpec.rotated_diabatic(0, -3, 3)
    rec = propagate(spec, oracle.exact_density(0, -3.0), RK4)
    expected = oracle.exact_density(0, 3.0).normalized().rho
    assert np.max(np.abs(rec.rho[-1] - expected)) <= 1e-6


def test_oracle_agreement_state_every_sample():
    spec = PassageSpec.rotated_diabatic(1, -3, 3)
    traj = propagate_state(spec, oracle.exact_state(1, -3.0), IntegratorConfig("rk4", 1e-3, record_stride=100))
    for t, psi in zip(traj.times, traj.states):
        assert _phase_aligned_error(psi, oracle.exact_state(1, t)) <= 1e-6


def test_log_norm_tracks_exact_amplitude():
    # exact trace x^2 + x'^2 is known, so the ledger can be checked absolutely
    spec = PassageSpec.rotated_diabatic(0, -6, 0)
    rho0 = oracle.exact_density(0, -6.0)
    rec = propagate(spec, rho0, IntegratorConfig("rk4", 1e-3, record_stride=500))
    assert np.count_nonzero(np.diff(rec.log_norm) != 0)
    exact = [math.log(oracle.exact_density(0, t).trace) for t in rec.times]
    np.testing.assert_allclose(rec.log_norm, exact, atol=1e-8)


def test_state_and_density_paths_agree():
    spec = PassageSpec.quadratic_adiabatic(-3, 2)
    psi0 = np.array([0.3 + 0.1j, -0.7j])
    cfg = IntegratorConfig("rk4", 1e-3, record_stride=50)
    traj = propagate_state(spec, psi0, cfg)
    rec = propagate(spec, density_from_state(psi0), cfg)
    np.testing.assert_array_equal(traj.times, rec.times)
    for psi, rho in zip(traj.states, rec.rho):
        np.testing.assert_allclose(np.outer(psi, psi.conj()), rho, atol=1e-8)
    np.testing.assert_allclose(2 * traj.log_norm, rec.log_norm, atol=1e-8)


@pytest.mark.parametrize("n", [0, 1, 2.5])
def test_frame_consistency(n):
    r = rotation()
    rho0 = density_from_bloch([0.2, -0.6, 0.3])
    cfg = IntegratorConfig("rk4", 1e-3, record_stride=40)
    lab = propagate(PassageSpec.lab_diabatic(n, -4, 2), rho0, cfg)
    rot = propagate(PassageSpec.rotated_diabatic(n, -4, 2), rotate_density(rho0), cfg)
    rotated_lab = r @ lab.rho @ r.conj().T
    assert np.max(np.abs(rotated_lab - rot.rho)) <= 1e-8
    np.testing.assert_allclose(lab.log_norm, rot.log_norm, atol=1e-8)


@pytest.mark.parametrize("c", [1e-8, 0.3, 7.0, 1e9])
def test_bloch_invariant_under_initial_scaling(c):
    spec = PassageSpec.linear_adiabatic(-6, 0)
    cfg = IntegratorConfig("rk4", 1e-2)
    base = propagate(spec, GENERIC, cfg)
    scaled = propagate(spec, DensityMatrix(c * GENERIC.rho), cfg)
    np.testing.assert_allclose(scaled.bloch, base.bloch, atol=1e-12)
    np.testing.assert_allclose(scaled.log_norm - math.log(c), base.log_norm, atol=1e-9)


def test_renormalization_is_invisible():
    # past t=0 the decaying branch cancels ~e^12 of growth, so stay on the contracting half
    spec = PassageSpec.rotated_diabatic(0, -4, 0)
    loose = propagate(spec, GENERIC, IntegratorConfig("rk4", 1e-3, renormalize_threshold=700))
    tight = propagate(spec, GENERIC, IntegratorConfig("rk4", 1e-3, renormalize_threshold=0.5))
    np.testing.assert_allclose(tight.bloch, loose.bloch, atol=1e-10)
    np.testing.assert_allclose(tight.log_norm, loose.log_norm, atol=1e-9)


def test_recorded_samples_are_valid_density_matrices():
    rec = propagate(PassageSpec.rotated_diabatic(1, -4, 4), GENERIC, IntegratorConfig("rk4", 1e-3, record_stride=10))
    assert np.all(np.diff(rec.times) > 0)
    assert np.all(np.isfinite(rec.log_norm))
    for k in range(len(rec)):
        dm = DensityMatrix(rec.rho[k])
        assert dm.trace == pytest.approx(1, abs=1e-12)
    assert np.all(np.linalg.norm(rec.bloch, axis=1) <= 1 + 1e-9)


def test_record_stride_keeps_endpoint():
    rec = propagate(PassageSpec.linear_adiabatic(-1, 0), GENERIC, IntegratorConfig("rk4", 0.1, record_stride=3))
    np.testing.assert_allclose(rec.times, [-1.0, -0.7, -0.4, -0.1, 0.0], atol=1e-12)


def test_numerical_failure_is_flagged_with_partial_output():
    spec = PassageSpec.quadratic_adiabatic(-1e100, 0.0)
    rec = propagate(spec, GENERIC, IntegratorConfig("euler", 1e99))
    assert rec.failed
    assert rec.failure_time is not None
    assert len(rec) >= 1
    assert np.all(np.isfinite(rec.rho))


def test_batch_members_are_independent():
    spec = PassageSpec.rotated_diabatic(1, -4, 0)
    states = [GENERIC, density_from_bloch([0, 0, -1]), DensityMatrix(IDENTITY)]
    batch = propagate_many(spec, states, IntegratorConfig("rk4", 1e-2))
    for s, rec in zip(states, batch):
        alone = propagate(spec, s, IntegratorConfig("rk4", 1e-2))
        np.testing.assert_allclose(rec.rho, alone.rho, atol=1e-14)


def test_euler_is_first_order():
    spec = PassageSpec.rotated_diabatic(0, -4, 0)
    slope = convergence_order(spec, GENERIC, "euler", [0.02, 0.01, 0.005])
    assert 0.7 <= slope <= 1.3


def test_rk4_is_fourth_order():
    spec = PassageSpec.rotated_diabatic(0, -4, 0)
    slope = convergence_order(spec, GENERIC, "rk4", [0.1, 0.05, 0.025])
    assert 3.7 <= slope <= 4.3


def test_convergence_order_preconditions():
    spec = PassageSpec.rotated_diabatic(0, -4, 0)
    with pytest.raises(InvalidInputError):
        convergence_order(spec, GENERIC, "rk4", [0.01])
    with pytest.raises(InvalidInputError):
        convergence_order(spec, GENERIC, "rk4", [0.01, 0.02, 0.005])
