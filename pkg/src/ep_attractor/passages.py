"""Time-dependent Hamiltonian families and exceptional-point location.

Every family is either written directly in the Jordan frame,
``[[0, 1], [w2(t), 0]]`` with ``w2 = 2n + 1 - t**2``, or in the lab form
``i*gamma(t)*sigma_z + kappa(t)*sigma_x``. The fixed unitary ``R`` maps the
lab form onto ``[[0, gamma+kappa], [kappa-gamma, 0]]``, so the lab-frame
parameters of the diabatic passage are chosen with ``gamma + kappa = 1`` and
``kappa - gamma = w2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .algebra import SIGMA_X, SIGMA_Z, DensityMatrix, as_mat2, dagger
from .errors import ConfigurationError

ROTATED_DIABATIC = "rotated-diabatic"
LAB_DIABATIC = "lab-diabatic"
LINEAR_ADIABATIC = "linear-adiabatic"
QUADRATIC_ADIABATIC = "quadratic-adiabatic"
CONSTANT_KAPPA = "constant-kappa"

FAMILIES = (ROTATED_DIABATIC, LAB_DIABATIC, LINEAR_ADIABATIC, QUADRATIC_ADIABATIC, CONSTANT_KAPPA)
DIABATIC_FAMILIES = (ROTATED_DIABATIC, LAB_DIABATIC)
# families symmetric under t -> -t
TIME_SYMMETRIC = (ROTATED_DIABATIC, LAB_DIABATIC, QUADRATIC_ADIABATIC)

EP_XTOL = 1e-12
EP_DISCRIMINANT_TOL = 1e-10


class OutsideWindowWarning(UserWarning):
    """Hamiltonian requested at a time outside the passage window."""


@dataclass(frozen=True)
class PassageSpec:
    """Declarative description of one Hamiltonian family on ``[t_start, t_end]``.

    ``n`` is used by the diabatic families, ``kappa0`` and ``gamma_coeffs``
    (``gamma(t) = c0 + c1*t + c2*t**2``) by ``constant-kappa``.
    """

    family: str
    t_start: float
    t_end: float
    n: float = 0.0
    kappa0: float = 1.0
    gamma_coeffs: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown passage family {self.family!r}")
        for name in ("t_start", "t_end", "n", "kappa0"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"{name} must be a real number") from None
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not self.t_start < self.t_end:
            raise ConfigurationError("t_start must be smaller than t_end")
        if self.n < 0:
            raise ConfigurationError("n must be non-negative")
        coeffs = tuple(float(c) for c in self.gamma_coeffs)
        if len(coeffs) > 3 or not all(math.isfinite(c) for c in coeffs):
            raise ConfigurationError("gamma_coeffs takes up to three finite coefficients")
        coeffs = coeffs + (0.0,) * (3 - len(coeffs))
        object.__setattr__(self, "gamma_coeffs", coeffs)
        if self.family == CONSTANT_KAPPA and self.kappa0 == 0:
            raise ConfigurationError("constant-kappa needs a nonzero kappa0")

    @classmethod
    def rotated_diabatic(cls, n, t_start, t_end):
        return cls(ROTATED_DIABATIC, t_start, t_end, n=n)

    @classmethod
    def lab_diabatic(cls, n, t_start, t_end):
        return cls(LAB_DIABATIC, t_start, t_end, n=n)

    @classmethod
    def linear_adiabatic(cls, t_start, t_end):
        return cls(LINEAR_ADIABATIC, t_start, t_end)

    @classmethod
    def quadratic_adiabatic(cls, t_start, t_end):
        return cls(QUADRATIC_ADIABATIC, t_start, t_end)

    @classmethod
    def constant_kappa(cls, kappa0, gamma_coeffs, t_start, t_end):
        return cls(CONSTANT_KAPPA, t_start, t_end, kappa0=kappa0, gamma_coeffs=tuple(gamma_coeffs))

    @property
    def is_diabatic(self) -> bool:
        return self.family in DIABATIC_FAMILIES

    @property
    def native_frame(self) -> str:
        return "rotated" if self.family == ROTATED_DIABATIC else "lab"

    def to_dict(self) -> dict:
        d = {"family": self.family, "t_start": self.t_start, "t_end": self.t_end}
        if self.is_diabatic:
            d["n"] = self.n
        if self.family == CONSTANT_KAPPA:
            d["kappa0"] = self.kappa0
            d["gamma_coeffs"] = list(self.gamma_coeffs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PassageSpec":
        allowed = {"family", "t_start", "t_end", "n", "kappa0", "gamma_coeffs"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigurationError(f"unknown passage keys: {sorted(unknown)}")
        missing = {"family", "t_start", "t_end"} - set(d)
        if missing:
            raise ConfigurationError(f"missing passage keys: {sorted(missing)}")
        return cls(**d)


def omega_sq(n, t):
    """``2n + 1 - t**2``; positive in the oscillating region, zero at the EP."""
    return 2 * n + 1 - np.square(t) if isinstance(t, np.ndarray) else 2 * n + 1 - t * t


def lab_frame_params(n, t):
    """Lab-frame ``(gamma, kappa)`` whose rotated Hamiltonian is ``[[0,1],[w2,0]]``."""
    w2 = omega_sq(n, t)
    return (1 - w2) / 2, (1 + w2) / 2


def gamma_kappa(spec: PassageSpec, t):
    """Lab-frame ``(gamma(t), kappa(t))``; for ``rotated-diabatic`` the lab equivalent."""
    t = np.asarray(t, dtype=float)
    if spec.is_diabatic:
        g, k = lab_frame_params(spec.n, t)
    elif spec.family == LINEAR_ADIABATIC:
        g, k = t, np.ones_like(t)
    elif spec.family == QUADRATIC_ADIABATIC:
        g, k = 1 - t * t, np.ones_like(t)
    else:
        c0, c1, c2 = spec.gamma_coeffs
        g, k = c0 + t * (c1 + c2 * t), np.full_like(t, spec.kappa0)
    if g.ndim == 0:
        return float(g), float(k)
    return g, k


def discriminant(spec: PassageSpec, t):
    """``kappa**2 - gamma**2`` (``w2`` for the diabatic families).

    Positive: real eigenvalue pair (exact phase); negative: imaginary pair
    (broken phase); zero: exceptional point.
    """
    if spec.is_diabatic:
        return omega_sq(spec.n, t if np.ndim(t) == 0 else np.asarray(t, dtype=float))
    g, k = gamma_kappa(spec, t)
    return (k - g) * (k + g)


def hamiltonian_series(spec: PassageSpec, t) -> np.ndarray:
    """Hamiltonians at every time in ``t``, shape ``t.shape + (2, 2)``."""
    t = np.asarray(t, dtype=float)
    h = np.zeros(t.shape + (2, 2), dtype=complex)
    if spec.family == ROTATED_DIABATIC:
        h[..., 0, 1] = 1.0
        h[..., 1, 0] = omega_sq(spec.n, t)
        return h
    g, k = gamma_kappa(spec, t)
    h[..., 0, 0] = 1j * g
    h[..., 1, 1] = -1j * g
    h[..., 0, 1] = k
    h[..., 1, 0] = k
    return h


def hamiltonian_at(spec: PassageSpec, t: float) -> np.ndarray:
    if not spec.t_start <= t <= spec.t_end:
        warnings.warn(
            f"t={t} outside passage window [{spec.t_start}, {spec.t_end}]",
            OutsideWindowWarning,
            stacklevel=2,
        )
    if spec.family == ROTATED_DIABATIC:
        return np.array([[0, 1], [omega_sq(spec.n, float(t)), 0]], dtype=complex)
    g, k = gamma_kappa(spec, float(t))
    return 1j * g * SIGMA_Z + k * SIGMA_X


_R = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)
_R.flags.writeable = False


def rotation() -> np.ndarray:
    """The fixed unitary taking the lab frame to the Jordan frame."""
    return _R.copy()


def rotate_hamiltonian(h) -> np.ndarray:
    h = as_mat2(h)
    return _R @ h @ dagger(_R)


def rotate_density(rho):
    """``R rho R^dag``; accepts a DensityMatrix or a raw ``(..., 2, 2)`` stack."""
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(_R @ rho.rho @ dagger(_R), rho.log_norm, check=False)
    return _R @ np.asarray(rho) @ dagger(_R)


def unrotate_density(rho):
    """Inverse of ``rotate_density``: Jordan frame back to the lab frame."""
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(dagger(_R) @ rho.rho @ _R, rho.log_norm, check=False)
    return dagger(_R) @ np.asarray(rho) @ _R


def to_frame(rho_stack: np.ndarray, native: str, frame: str) -> np.ndarray:
    """Re-express density matrices recorded in ``native`` frame in ``frame``."""
    if frame == "native" or frame == native:
        return rho_stack
    if native == "lab" and frame == "rotated":
        return rotate_density(rho_stack)
    if native == "rotated" and frame == "lab":
        return unrotate_density(rho_stack)
    raise ConfigurationError(f"unknown frame {frame!r}")


@dataclass(frozen=True)
class EpReport:
    """Exceptional points of a passage inside its window.

    ``regimes`` holds ``(t_from, t_to, label)`` with label ``"exact"`` or
    ``"broken"`` by the sign of ``kappa**2 - gamma**2`` on the interval.
    """

    times: tuple
    eigenvectors: tuple
    regimes: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "eigenvectors": [
                [[float(z.real), float(z.imag)] for z in v] for v in self.eigenvectors
            ],
            "regimes": [[a, b, label] for a, b, label in self.regimes],
        }


def _gamma_kappa_polys(spec: PassageSpec):
    if spec.family == LINEAR_ADIABATIC:
        return Polynomial([0.0, 1.0]), Polynomial([1.0])
    if spec.family == QUADRATIC_ADIABATIC:
        return Polynomial([1.0, 0.0, -1.0]), Polynomial([1.0])
    return Polynomial(list(spec.gamma_coeffs)), Polynomial([spec.kappa0])


def _polynomial_roots(f: Polynomial, t0: float, t1: float, tol: float) -> list:
    """Zeros of ``f`` on ``[t0, t1]``: sign changes plus tangential double roots.

    ``f`` is monotone between consecutive critical points, so each such
    interval holds at most one crossing and brentq brackets it exactly.
    Critical points where ``|f| <= tol`` are kept as tangencies.
    """
    f = f.trim()
    if not f.coef.any():
        return []
    if f.degree() > 0:
        # Cauchy bound: every root lies within it, so huge windows stay finite
        bound = 1.0 + float(np.max(np.abs(f.coef[:-1])) / abs(f.coef[-1]))
        t0, t1 = max(t0, -bound), min(t1, bound)
        if t0 > t1:
            return []
    df = f.deriv()
    crit = []
    if df.degree() > 0:
        for r in df.roots():
            if abs(r.imag) <= 1e-8 * (1 + abs(r.real)) and t0 < r.real < t1:
                crit.append(float(r.real))
    edges = [t0] + sorted(crit) + [t1]
    values = [float(f(t)) for t in edges]
    roots = [t for t, v in zip(edges, values) if v == 0.0]
    for (a, fa), (b, fb) in zip(zip(edges, values), zip(edges[1:], values[1:])):
        if fa * fb < 0:
            roots.append(brentq(f, a, b, xtol=EP_XTOL, rtol=4 * np.finfo(float).eps))
    roots += [t for t, v in zip(edges[1:-1], values[1:-1]) if 0 < abs(v) <= tol]
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    return merged


def _coalesced_vector(spec: PassageSpec, t: float) -> np.ndarray:
    if spec.family == ROTATED_DIABATIC:
        return np.array([1, 0], dtype=complex)
    g, k = gamma_kappa(spec, t)
    # null vector of [[i g, k], [k, -i g]] when k**2 == g**2
    v = np.array([k, -1j * g], dtype=complex)
    return v / np.linalg.norm(v)


def ep_times(spec: PassageSpec) -> EpReport:
    """Locate the exceptional points of ``spec`` inside its time window."""
    t0, t1 = spec.t_start, spec.t_end
    if spec.is_diabatic:
        tc = math.sqrt(2 * spec.n + 1)
        times = [t for t in (-tc, tc) if t0 <= t <= t1]
    else:
        g, k = _gamma_kappa_polys(spec)
        disc = k * k - g * g
        scale = max(1.0, float(np.max(np.abs(disc.coef))))
        times = _polynomial_roots(disc, t0, t1, EP_DISCRIMINANT_TOL * scale)
    vectors = tuple(_coalesced_vector(spec, t) for t in times)
    edges = [t0] + [t for t in times if t0 < t < t1] + [t1]
    regimes = []
    for a, b in zip(edges[:-1], edges[1:]):
        with np.errstate(over="ignore"):
            d = discriminant(spec, 0.5 * (a + b))
        regimes.append((a, b, "exact" if d > 0 else "broken"))
    return EpReport(tuple(times), vectors, tuple(regimes))
