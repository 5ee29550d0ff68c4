"""Complex 2x2 algebra, density matrices and Bloch vectors.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype ``complex``;
pure states are arrays of shape ``(2,)``. Most helpers also accept a leading
batch axis, which the integrator relies on to push a whole ensemble through a
single array operation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, InvalidInputError

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-12
BLOCH_RADIUS_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.flags.writeable = False


def as_mat2(m) -> np.ndarray:
    """Validate and return ``m`` as a finite complex 2x2 array (a copy)."""
    a = np.array(m, dtype=complex)
    if a.shape != (2, 2):
        raise InvalidInputError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def as_state(psi) -> np.ndarray:
    a = np.array(psi, dtype=complex).reshape(-1)
    if a.shape != (2,):
        raise InvalidInputError(f"expected two amplitudes, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("state has non-finite amplitudes")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_split(h) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(H+, H-)`` with ``H+ = (H + H^dag)/2`` and ``H- = (H - H^dag)/2``."""
    h = as_mat2(h)
    hd = dagger(h)
    return (h + hd) / 2, (h - hd) / 2


def commutator(a, b) -> np.ndarray:
    a, b = as_mat2(a), as_mat2(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_mat2(a), as_mat2(b)
    return a @ b + b @ a


def _scale(rho: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(rho))))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A (possibly unnormalized) density matrix with a log-norm ledger.

    The physical matrix is ``exp(log_norm) * rho``. ``rho`` itself is kept
    Hermitian and is frozen (read-only) after construction.

    Construction checks Hermiticity, trace and positivity. Integrator outputs
    pass ``check=False`` because a first-order step can leave an eigenvalue
    of order ``-dt**2`` behind.
    """

    rho: np.ndarray
    log_norm: float = 0.0
    check: bool = True

    def __post_init__(self):
        rho = as_mat2(self.rho)
        if not np.isfinite(self.log_norm):
            raise InvalidInputError("log_norm must be finite")
        tol = HERMITIAN_TOL * _scale(rho)
        if self.check and np.max(np.abs(rho - dagger(rho))) > tol:
            raise InvalidInputError("density matrix is not Hermitian")
        rho = (rho + dagger(rho)) / 2
        tr = float(np.real(np.trace(rho)))
        if not tr > 0:
            raise DegenerateStateError("density matrix trace must be positive")
        if self.check and np.min(np.linalg.eigvalsh(rho)) < -POSITIVITY_TOL * _scale(rho):
            raise InvalidInputError("density matrix has a negative eigenvalue")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "log_norm", float(self.log_norm))

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def normalized(self) -> "DensityMatrix":
        """Unit-trace copy; the removed factor moves into ``log_norm``."""
        tr = self.trace
        return DensityMatrix(self.rho / tr, self.log_norm + np.log(tr), check=False)

    def physical(self) -> np.ndarray:
        return np.exp(self.log_norm) * self.rho

    def __repr__(self):
        return f"DensityMatrix(rho={self.rho.tolist()!r}, log_norm={self.log_norm!r})"


def _matrix_of(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.rho
    return np.asarray(rho, dtype=complex)


def bloch_components(rho: np.ndarray) -> np.ndarray:
    """Vectorized Bloch projection over a ``(..., 2, 2)`` stack, no checks.

    ``a_i = tr(sigma_i rho) / tr(rho)``.
    """
    tr = np.real(rho[..., 0, 0] + rho[..., 1, 1])
    ax = 2.0 * np.real(rho[..., 0, 1])
    ay = -2.0 * np.imag(rho[..., 0, 1])
    az = np.real(rho[..., 0, 0] - rho[..., 1, 1])
    return np.stack([ax, ay, az], axis=-1) / tr[..., None]


def purity_values(rho: np.ndarray) -> np.ndarray:
    """Vectorized ``tr(rho~^2)`` over a ``(..., 2, 2)`` stack of Hermitian matrices."""
    tr = np.real(rho[..., 0, 0] + rho[..., 1, 1])
    sq = np.sum(np.abs(rho) ** 2, axis=(-2, -1))
    return sq / tr**2


def bloch_project(rho) -> np.ndarray:
    """Bloch vector of ``rho`` after trace normalization.

    Insensitive to positive rescaling of ``rho``.
    """
    m = _matrix_of(rho)
    tr = np.real(np.trace(m))
    if not tr > 0:
        raise DegenerateStateError("cannot project a state with non-positive trace")
    return bloch_components(m)


def purity(rho) -> float:
    m = _matrix_of(rho)
    tr = np.real(np.trace(m))
    if not tr > 0:
        raise DegenerateStateError("purity undefined for non-positive trace")
    return float(purity_values(m))


def density_from_state(psi) -> DensityMatrix:
    """``|psi><psi|`` without normalization."""
    psi = as_state(psi)
    if not np.vdot(psi, psi).real > 0:
        raise InvalidInputError("zero vector is not a state")
    return DensityMatrix(np.outer(psi, np.conj(psi)))


def density_from_bloch(a) -> DensityMatrix:
    """``(I + a . sigma) / 2`` for ``|a| <= 1``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidInputError("Bloch vector must be three finite reals")
    if np.linalg.norm(a) > 1 + BLOCH_RADIUS_TOL:
        raise InvalidInputError(f"Bloch vector outside the unit ball: |a| = {np.linalg.norm(a)}")
    rho = 0.5 * (IDENTITY + a[0] * SIGMA_X + a[1] * SIGMA_Y + a[2] * SIGMA_Z)
    # |a| may exceed 1 by the rounding tolerance; skip the positivity check then.
    return DensityMatrix(rho, check=bool(np.linalg.norm(a) <= 1))
