"""Closed-form solution of the diabatic passage through Hermite functions.

``x_n(t) = (2**n n! sqrt(pi))**(-1/2) exp(-t**2/2) H_n(t)`` is the bounded
solution of ``x'' + (2n + 1 - t**2) x = 0``, and the state ``(x_n, i x_n')``
solves ``i psi' = [[0, 1], [w2(t), 0]] psi`` exactly. Everything here uses
the unit-L2 normalization of ``x_n``.
"""

from __future__ import annotations

import math
import numbers

import numpy as np
from scipy.optimize import brentq

from .algebra import DensityMatrix
from .errors import InvalidInputError

_PI_QUARTER = math.pi ** -0.25


def _check_n(n) -> int:
    if isinstance(n, (bool, np.bool_)):
        raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    if not isinstance(n, numbers.Integral):
        if isinstance(n, numbers.Real) and float(n).is_integer():
            n = int(n)
        else:
            raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    if n < 0:
        raise InvalidInputError(f"n must be a non-negative integer, got {n!r}")
    return int(n)


def hermite_functions(n_max: int, t):
    """All of ``x_0 .. x_{n_max}`` at ``t``, stacked on a new leading axis.

    Uses the orthonormal three-term recurrence, so nothing overflows for
    moderate ``n`` even where ``H_n(t)`` alone would.
    """
    n_max = _check_n(n_max)
    t = np.asarray(t, dtype=float)
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * t * t)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * t * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else v


def x_n(n, t):
    n = _check_n(n)
    return _scalar_or_array(hermite_functions(n, t)[n])


def dx_n(n, t):
    """``x_n'`` from ``x_n' = sqrt(n/2) x_{n-1} - sqrt((n+1)/2) x_{n+1}``."""
    n = _check_n(n)
    xs = hermite_functions(n + 1, t)
    lower = math.sqrt(n / 2) * xs[n - 1] if n > 0 else 0.0
    return _scalar_or_array(lower - math.sqrt((n + 1) / 2) * xs[n + 1])


def d2x_n(n, t):
    """``x_n''`` by applying the derivative recursion twice."""
    n = _check_n(n)
    d = dx_n(n + 1, t) * -math.sqrt((n + 1) / 2)
    if n > 0:
        d = d + math.sqrt(n / 2) * dx_n(n - 1, t)
    return _scalar_or_array(d)


def exact_state(n, t) -> np.ndarray:
    """``(x_n(t), i x_n'(t))``; a trailing axis of length 2 if ``t`` is an array."""
    x = x_n(n, t)
    y = 1j * dx_n(n, t)
    return np.stack([np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)], axis=-1)


def exact_density_matrix(n, t) -> np.ndarray:
    """``|psi><psi|`` for ``psi = exact_state(n, t)``, vectorized over ``t``."""
    psi = exact_state(n, t)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def exact_density(n, t: float) -> DensityMatrix:
    """Rank-one density matrix with ``p11 = x**2``, ``p22 = x'**2``, ``p12 = -i x x'``."""
    return DensityMatrix(exact_density_matrix(n, float(t)))


def coalescence_time(n) -> float:
    """Positive EP time ``sqrt(2n + 1)`` of the diabatic passage."""
    return math.sqrt(2 * n + 1)


def turning_time_estimate(n) -> float:
    """Large-``n`` estimate ``sqrt(2n)`` of the outermost extremum of ``x_n``."""
    return math.sqrt(2 * n)


def turning_time_numeric(n, step: float = 1e-3, xtol: float = 1e-13) -> float:
    """Outermost (positive) extremum of ``|x_n|``.

    Extrema lie inside the oscillating region ``|t| < sqrt(2n+1)``, so the
    scan stops there and the last sign change of ``x_n'`` is refined by
    bracketed root finding.
    """
    n = _check_n(n)
    if n == 0:
        return 0.0
    t_max = math.sqrt(2 * n + 1)
    grid = np.linspace(0.0, t_max, int(math.ceil(t_max / step)) + 1)
    d = dx_n(n, grid)
    idx = np.nonzero(d[:-1] * d[1:] <= 0)[0]
    i = idx[-1]
    if d[i + 1] == 0.0:
        return float(grid[i + 1])
    return float(brentq(lambda s: dx_n(n, s), grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))


def asymptotic_initial_state(t0: float) -> np.ndarray:
    """``(1 + t0**2)**(-1/2) [i, t0]``, the early-time state that reaches ``[1, 0]``."""
    return np.array([1j, t0], dtype=complex) / math.sqrt(1 + t0 * t0)


def overlap(theta: float, phi: float, t0: float) -> complex:
    """``<phi|phi(t0)>`` for ``|phi> = [cos theta, exp(-i phi) sin theta]``."""
    bra = np.array([math.cos(theta), np.exp(-1j * phi) * math.sin(theta)])
    return complex(np.vdot(bra, asymptotic_initial_state(t0)))
