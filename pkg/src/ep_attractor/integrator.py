"""Fixed-step propagation of density matrices and pure states.

The density matrix follows ``d rho/dt = -i (H rho - rho H^dag)``, which is
``-i[H+, rho] - i{H-, rho}`` written without the split. Two schemes are
available: the explicit first-order Euler step and classical RK4 with ``H``
sampled at the stage times.

Non-Hermitian evolution grows or shrinks the trace without bound, so the
state is rescaled to unit trace whenever ``|log trace|`` exceeds a threshold
and the removed factor is accumulated in a log-norm ledger.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DensityMatrix,
    as_mat2,
    as_state,
    bloch_components,
    dagger,
    purity_values,
)
from .errors import ConfigurationError, InvalidInputError, NumericalFailure
from .passages import PassageSpec, hamiltonian_series

log = logging.getLogger(__name__)

METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    renormalize_threshold: float = 10.0
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be a positive finite number, got {self.dt!r}")
        if not self.renormalize_threshold > 0:
            raise ConfigurationError("renormalize_threshold must be positive")
        if isinstance(self.record_stride, bool) or not isinstance(self.record_stride, int) or self.record_stride < 1:
            raise ConfigurationError("record_stride must be a positive integer")

    def to_dict(self):
        return {
            "method": self.method,
            "dt": self.dt,
            "renormalize_threshold": self.renormalize_threshold,
            "record_stride": self.record_stride,
        }


@dataclass(eq=False)
class TrajectoryRecord:
    """Recorded samples of one density-matrix trajectory.

    ``rho`` is trace-normalized at every sample; the physical matrix at
    sample ``k`` is ``exp(log_norm[k]) * rho[k]``.
    """

    spec: PassageSpec
    times: np.ndarray
    rho: np.ndarray
    bloch: np.ndarray
    purity: np.ndarray
    log_norm: np.ndarray
    frame: str = "native"
    failed: bool = False
    failure_time: float | None = None

    def __len__(self):
        return len(self.times)

    def density(self, k: int) -> DensityMatrix:
        return DensityMatrix(self.rho[k], self.log_norm[k], check=False)

    @property
    def final_bloch(self) -> np.ndarray:
        return self.bloch[-1]


@dataclass(eq=False)
class StateTrajectory:
    """Recorded samples of a pure-state trajectory.

    ``states`` have unit norm; the physical amplitude vector is
    ``exp(log_norm[k]) * states[k]`` (``log_norm`` is the log of the
    Euclidean norm, half the log-trace of the matching density matrix).
    """

    spec: PassageSpec
    times: np.ndarray
    states: np.ndarray
    log_norm: np.ndarray
    failed: bool = False
    failure_time: float | None = None


def master_rhs(h, rho):
    """``-i (H rho - rho H^dag)``; broadcasts over leading axes of ``rho``."""
    return -1j * (h @ rho - rho @ dagger(h))


def _hermitize(rho):
    return 0.5 * (rho + dagger(rho))


def euler_step(h_t, rho: DensityMatrix, dt: float, t: float | None = None) -> DensityMatrix:
    """One explicit Euler step of the master equation."""
    if not dt >= 0:
        raise InvalidInputError("dt must be non-negative")
    if dt == 0:
        return rho
    h_t = as_mat2(h_t)
    with np.errstate(over="ignore", invalid="ignore"):
        new = _hermitize(rho.rho + dt * master_rhs(h_t, rho.rho))
    if not np.all(np.isfinite(new)):
        raise NumericalFailure("non-finite density matrix after Euler step", t=t)
    return DensityMatrix(new, rho.log_norm, check=False)


def time_grid(spec: PassageSpec, dt: float) -> tuple[np.ndarray, float]:
    """Uniform grid on the passage window with the step closest to ``dt``.

    The window length is split into ``round(span/dt)`` equal steps so both
    endpoints are grid points.
    """
    span = spec.t_end - spec.t_start
    steps = max(1, int(round(span / dt)))
    h = span / steps
    times = spec.t_start + h * np.arange(steps + 1)
    times[-1] = spec.t_end
    return times, h


def _density_rhs(h, y):
    return -1j * (h @ y - y @ dagger(h))


def _state_rhs(h, y):
    return -1j * (y @ h.T)


def _density_scale(y):
    return np.real(y[:, 0, 0] + y[:, 1, 1])


def _state_scale(y):
    return np.sqrt(np.sum(np.abs(y) ** 2, axis=1))


def _integrate(spec, y0, cfg, rhs, scale, hermitian):
    """March a batch ``y0`` (members on axis 0) across the passage window.

    Returns recorded times, states rescaled to unit ``scale``, log of the
    physical scale, and per-member failure times (NaN if the member
    survived). Failed members are frozen at their last finite state.
    """
    times, h = time_grid(spec, cfg.dt)
    steps = len(times) - 1
    if cfg.method == "rk4":
        half = spec.t_start + h * (np.arange(steps) + 0.5)
        hams_half = hamiltonian_series(spec, half)
    hams = hamiltonian_series(spec, times)

    y = np.array(y0, dtype=complex)
    m = y.shape[0]
    s = scale(y)
    ledger = np.log(s)
    y = y / s.reshape((m,) + (1,) * (y.ndim - 1))
    thr = cfg.renormalize_threshold
    lo, hi = math.exp(-thr), math.exp(thr)
    alive = np.ones(m, dtype=bool)
    failure = np.full(m, np.nan)

    record_idx = list(range(0, steps + 1, cfg.record_stride))
    if record_idx[-1] != steps:
        record_idx.append(steps)
    n_rec = len(record_idx)
    out_y = np.empty((n_rec,) + y.shape, dtype=complex)
    out_ln = np.empty((n_rec, m))
    out_valid = np.ones((n_rec, m), dtype=bool)
    rec = 0
    shape1 = (m,) + (1,) * (y.ndim - 1)

    def record(k_rec, y, ledger, alive):
        s = scale(y)
        out_y[k_rec] = y / s.reshape(shape1)
        out_ln[k_rec] = ledger + np.log(s)
        out_valid[k_rec] = alive

    record(rec, y, ledger, alive)
    rec += 1
    for k in range(steps):
        if cfg.method == "euler":
            y_new = y + h * rhs(hams[k], y)
        else:
            hm = hams_half[k]
            k1 = rhs(hams[k], y)
            k2 = rhs(hm, y + (0.5 * h) * k1)
            k3 = rhs(hm, y + (0.5 * h) * k2)
            k4 = rhs(hams[k + 1], y + h * k3)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if hermitian:
            y_new = _hermitize(y_new)
        s = scale(y_new)
        ok = np.isfinite(s) & (s > 0) & np.all(np.isfinite(y_new.reshape(m, -1)), axis=1)
        newly_failed = alive & ~ok
        if np.any(newly_failed):
            failure[newly_failed] = times[k + 1]
            alive = alive & ok
            log.warning("propagation failed for %d member(s) at t=%g", int(newly_failed.sum()), times[k + 1])
        y = np.where(alive.reshape(shape1), y_new, y)
        s = np.where(alive, s, 1.0)
        out_of_range = alive & ((s < lo) | (s > hi))
        if np.any(out_of_range):
            fac = np.where(out_of_range, s, 1.0)
            y = y / fac.reshape(shape1)
            ledger = ledger + np.log(fac)
        if rec < n_rec and record_idx[rec] == k + 1:
            record(rec, y, ledger, alive)
            rec += 1
        if not np.any(alive):
            break
    rec_times = times[record_idx]
    return rec_times, out_y, out_ln, out_valid, failure, rec


def _initial_density(rho0) -> DensityMatrix:
    if isinstance(rho0, DensityMatrix):
        return rho0
    return DensityMatrix(rho0)


def propagate_many(spec: PassageSpec, rho0s, cfg: IntegratorConfig = IntegratorConfig()) -> list[TrajectoryRecord]:
    """Propagate several initial density matrices on one shared grid.

    Members are independent; the batch is only a vectorization. Failed
    members come back truncated at their last finite sample with
    ``failed=True``.
    """
    dms = [_initial_density(r) for r in rho0s]
    if not dms:
        raise InvalidInputError("no initial states given")
    y0 = np.stack([d.rho for d in dms])
    base_ln = np.array([d.log_norm for d in dms])
    times, ys, lns, valid, failure, n_done = _integrate(spec, y0, cfg, _density_rhs, _density_scale, True)
    records = []
    for i in range(len(dms)):
        keep = valid[:n_done, i]
        last = int(np.count_nonzero(keep))
        rho = ys[:last, i]
        records.append(
            TrajectoryRecord(
                spec=spec,
                times=times[:last].copy(),
                rho=rho,
                bloch=bloch_components(rho),
                purity=purity_values(rho),
                log_norm=lns[:last, i] + base_ln[i],
                failed=bool(np.isfinite(failure[i])),
                failure_time=float(failure[i]) if np.isfinite(failure[i]) else None,
            )
        )
    return records


def propagate(spec: PassageSpec, rho0, cfg: IntegratorConfig = IntegratorConfig()) -> TrajectoryRecord:
    """Propagate one density matrix from ``spec.t_start`` to ``spec.t_end``."""
    return propagate_many(spec, [rho0], cfg)[0]


def propagate_state(spec: PassageSpec, psi0, cfg: IntegratorConfig = IntegratorConfig()) -> StateTrajectory:
    """Pure-state fast path for ``i psi' = H(t) psi``."""
    psi0 = as_state(psi0)
    if not np.vdot(psi0, psi0).real > 0:
        raise InvalidInputError("zero vector is not a state")
    times, ys, lns, valid, failure, n_done = _integrate(spec, psi0[None, :], cfg, _state_rhs, _state_scale, False)
    last = int(np.count_nonzero(valid[:n_done, 0]))
    return StateTrajectory(
        spec=spec,
        times=times[:last].copy(),
        states=ys[:last, 0],
        log_norm=lns[:last, 0],
        failed=bool(np.isfinite(failure[0])),
        failure_time=float(failure[0]) if np.isfinite(failure[0]) else None,
    )


def _final_normalized(spec, rho0, method, dt):
    rec = propagate(spec, rho0, IntegratorConfig(method=method, dt=dt, record_stride=10**9))
    if rec.failed:
        raise NumericalFailure("convergence run failed", t=rec.failure_time)
    return rec.rho[-1]


def convergence_errors(spec: PassageSpec, rho0, method: str, dt_list) -> tuple[np.ndarray, np.ndarray]:
    """Final-time errors of ``method`` at each step size.

    The reference is an RK4 run at a tenth of the smallest step; the error
    is the Frobenius distance between trace-normalized final matrices.
    Returns ``(dts, errors)`` using the effective grid steps.
    """
    dts = [float(d) for d in dt_list]
    if len(dts) < 3:
        raise InvalidInputError("convergence_order needs at least three step sizes")
    if any(b >= a for a, b in zip(dts, dts[1:])) or dts[-1] <= 0:
        raise InvalidInputError("dt_list must be strictly decreasing and positive")
    ref = _final_normalized(spec, rho0, "rk4", dts[-1] / 10)
    effective, errors = [], []
    for d in dts:
        _, h = time_grid(spec, d)
        effective.append(h)
        errors.append(np.linalg.norm(_final_normalized(spec, rho0, method, d) - ref))
    return np.array(effective), np.array(errors)


def convergence_order(spec: PassageSpec, rho0, method: str, dt_list) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    dts, errors = convergence_errors(spec, rho0, method, dt_list)
    if np.any(errors <= 0):
        raise NumericalFailure("zero error against the reference; step sizes too small to resolve")
    if np.any(np.diff(errors) >= 0):
        warnings.warn("errors are not monotone in dt; order estimate is unreliable", RuntimeWarning, stacklevel=2)
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)
