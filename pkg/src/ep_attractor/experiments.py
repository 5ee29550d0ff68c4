"""Ensembles of initial states and attractor-convergence metrics.

An ensemble is a set of pure and mixed initial states pushed through one
passage on a shared time grid. The report tracks how quickly the Bloch
vectors collapse onto a single point, how far they sit from the exact
Hermite-function orbit (diabatic passages only), and how pure they become.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .algebra import bloch_components, density_from_bloch
from .errors import ConfigurationError, InvalidInputError
from .integrator import IntegratorConfig, TrajectoryRecord, propagate_many
from .passages import (
    ROTATED_DIABATIC,
    LAB_DIABATIC,
    PassageSpec,
    ep_times,
    to_frame,
)

# pass/fail levels for the attractor properties; reported alongside results
DIAMETER_TIGHT = 1e-3
DIAMETER_LOOSE = 1e-2
ORBIT_DISTANCE_MAX = 1e-2
PURITY_FLOOR = 1 - 1e-4
TAIL_FRACTION = 0.2
TAIL_SLACK = 1e-3


@dataclass(frozen=True)
class EnsembleSpec:
    passage: PassageSpec
    n_pure: int
    n_mixed: int
    seed: int
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        for name in ("n_pure", "n_mixed", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer")
        if self.n_pure + self.n_mixed == 0:
            raise ConfigurationError("ensemble is empty")

    def to_dict(self) -> dict:
        return {
            "passage": self.passage.to_dict(),
            "n_pure": int(self.n_pure),
            "n_mixed": int(self.n_mixed),
            "seed": int(self.seed),
            "integrator": self.integrator.to_dict(),
        }


@dataclass(eq=False)
class ConvergenceReport:
    times: np.ndarray
    diameter: np.ndarray
    orbit_distance: np.ndarray | None
    min_purity: np.ndarray
    fixed_point: np.ndarray
    fixed_point_frames: dict
    failures: int
    thresholds: dict = field(default_factory=dict)

    @property
    def final_diameter(self) -> float:
        return float(self.diameter[-1])

    @property
    def final_min_purity(self) -> float:
        return float(self.min_purity[-1])

    @property
    def final_orbit_distance(self) -> float | None:
        if self.orbit_distance is None:
            return None
        return float(self.orbit_distance[-1])

    def tail_non_increasing(self, fraction=TAIL_FRACTION, slack=TAIL_SLACK) -> bool:
        """Diameter never rises by more than ``slack`` over the final ``fraction`` of the window."""
        t = self.times
        tail = self.diameter[t >= t[-1] - fraction * (t[-1] - t[0])]
        running_min = np.minimum.accumulate(tail)
        return bool(np.all(tail - running_min <= slack))


def _unit_vectors(rng, count):
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_initial_states(n_pure: int, n_mixed: int, seed: int) -> list:
    """Pure states uniform on the Bloch sphere, then mixed states uniform in the ball."""
    if n_pure < 0 or n_mixed < 0:
        raise InvalidInputError("counts must be non-negative")
    if n_pure + n_mixed == 0:
        raise InvalidInputError("empty ensemble")
    rng = np.random.default_rng(seed)
    pure = _unit_vectors(rng, n_pure)
    directions = _unit_vectors(rng, n_mixed)
    radii = rng.uniform(0.0, 1.0, n_mixed) ** (1.0 / 3.0)
    mixed = directions * radii[:, None]
    return [density_from_bloch(a) for a in np.concatenate([pure, mixed])]


def oracle_bloch(spec: PassageSpec, times, frame: str = "native") -> np.ndarray:
    """Bloch vectors of the exact orbit of a diabatic passage at ``times``."""
    if not spec.is_diabatic:
        raise InvalidInputError("the exact orbit exists only for the diabatic passages")
    if not float(spec.n).is_integer():
        raise InvalidInputError("the exact orbit needs integer n")
    rho = oracle.exact_density_matrix(int(spec.n), np.asarray(times, dtype=float))
    # the oracle lives in the Jordan (rotated) frame
    rho = to_frame(rho, "rotated", _resolve(spec, frame))
    return bloch_components(rho)


def _resolve(spec: PassageSpec, frame: str) -> str:
    return spec.native_frame if frame == "native" else frame


def orbit_distance(traj: TrajectoryRecord, n=None) -> np.ndarray:
    """Distance from each recorded Bloch vector to the exact orbit at the same time."""
    spec = traj.spec
    if spec.family not in (ROTATED_DIABATIC, LAB_DIABATIC):
        raise InvalidInputError("orbit distance needs a diabatic passage")
    n = spec.n if n is None else n
    if not float(n).is_integer():
        raise InvalidInputError(f"orbit distance unsupported for non-integer n={n}")
    if float(n) != spec.n:
        raise InvalidInputError("n does not match the trajectory's passage")
    ref = oracle_bloch(spec, traj.times, traj.frame)
    return np.linalg.norm(traj.bloch - ref, axis=1)


def pairwise_diameter(blochs: np.ndarray) -> np.ndarray:
    """Max pairwise Euclidean distance; ``blochs`` has shape ``(members, samples, 3)``."""
    m = blochs.shape[0]
    diam = np.zeros(blochs.shape[1])
    for i in range(m - 1):
        d = np.linalg.norm(blochs[i + 1 :] - blochs[i], axis=-1)
        diam = np.maximum(diam, d.max(axis=0))
    return diam


def reframe(traj: TrajectoryRecord, frame: str) -> TrajectoryRecord:
    """Same trajectory with matrices and Bloch vectors expressed in ``frame``."""
    target = _resolve(traj.spec, frame)
    current = _resolve(traj.spec, traj.frame)
    if target == current:
        return traj
    rho = to_frame(traj.rho, current, target)
    return TrajectoryRecord(
        spec=traj.spec,
        times=traj.times,
        rho=rho,
        bloch=bloch_components(rho),
        purity=traj.purity,
        log_norm=traj.log_norm,
        frame=target,
        failed=traj.failed,
        failure_time=traj.failure_time,
    )


def convergence_report(spec: PassageSpec, trajectories: list, frame: str = "native") -> ConvergenceReport:
    survivors = [t for t in trajectories if not t.failed]
    failures = len(trajectories) - len(survivors)
    if not survivors:
        raise InvalidInputError("every ensemble member failed")
    times = survivors[0].times
    blochs = np.stack([t.bloch for t in survivors])
    purities = np.stack([t.purity for t in survivors])
    orbit = None
    if spec.is_diabatic and float(spec.n).is_integer():
        ref = oracle_bloch(spec, times, survivors[0].frame)
        orbit = np.linalg.norm(blochs - ref[None], axis=-1).mean(axis=0)
    final_rho = np.stack([t.rho[-1] for t in survivors])
    native = spec.native_frame
    current = _resolve(spec, survivors[0].frame)
    frames = {}
    for name in ("lab", "rotated"):
        frames[name] = bloch_components(to_frame(final_rho, current, name)).mean(axis=0)
    return ConvergenceReport(
        times=times,
        diameter=pairwise_diameter(blochs),
        orbit_distance=orbit,
        min_purity=purities.min(axis=0),
        fixed_point=blochs[:, -1].mean(axis=0),
        fixed_point_frames=frames,
        failures=failures,
        thresholds={
            "diameter_tight": DIAMETER_TIGHT,
            "diameter_loose": DIAMETER_LOOSE,
            "orbit_distance_max": ORBIT_DISTANCE_MAX,
            "purity_floor": PURITY_FLOOR,
            "tail_fraction": TAIL_FRACTION,
            "tail_slack": TAIL_SLACK,
            "native_frame": native,
        },
    )


def run_ensemble(spec: EnsembleSpec, frame: str = "native"):
    """Propagate every initial state of ``spec``; returns ``(trajectories, report)``."""
    states = sample_initial_states(spec.n_pure, spec.n_mixed, spec.seed)
    trajectories = propagate_many(spec.passage, states, spec.integrator)
    if frame != "native":
        trajectories = [reframe(t, frame) for t in trajectories]
    return trajectories, convergence_report(spec.passage, trajectories, frame)


# Each figure starts deep in the broken phase and ends at its attractor:
# t = 0 for the diabatic pair (state [1,0] for n=0, [0,1] for n=1), the
# window end for the adiabatic pair.
FIGURES = {
    "fig1a": EnsembleSpec(PassageSpec.rotated_diabatic(0, -4.0, 0.0), 10, 10, seed=20170101),
    "fig1b": EnsembleSpec(PassageSpec.rotated_diabatic(1, -4.0, 0.0), 10, 10, seed=20170102),
    "fig2a": EnsembleSpec(PassageSpec.linear_adiabatic(-6.0, 0.0), 5, 5, seed=20170201),
    "fig2b": EnsembleSpec(PassageSpec.quadratic_adiabatic(-6.0, 6.0), 5, 5, seed=20170202),
}


def figure_spec(fig_id: str) -> EnsembleSpec:
    try:
        return FIGURES[fig_id]
    except KeyError:
        raise ConfigurationError(f"unknown figure {fig_id!r}; choose from {sorted(FIGURES)}") from None


@dataclass(eq=False)
class Dataset:
    name: str
    ensemble: EnsembleSpec
    trajectories: list
    report: ConvergenceReport
    ep_report: object
    frame: str = "native"


def figure_dataset(fig_id: str, frame: str = "native") -> Dataset:
    spec = figure_spec(fig_id)
    trajectories, report = run_ensemble(spec, frame)
    return Dataset(fig_id, spec, trajectories, report, ep_times(spec.passage), frame)


def ensemble_dataset(spec: EnsembleSpec, name: str = "ensemble", frame: str = "native") -> Dataset:
    trajectories, report = run_ensemble(spec, frame)
    return Dataset(name, spec, trajectories, report, ep_times(spec.passage), frame)
