"""Hermite functions on the half-line.

``psi_n(r) = h_n(r) exp(-r^2/2) / c_n`` with ``c_n = sqrt(2^(n-1) n! sqrt(pi))``,
so that every ``psi_n`` has unit norm on ``(0, inf)``.  The odd members
``Phi_k = psi_(2k+1)`` vanish at the origin and form the radial basis.

Values are produced by the normalised three-term recurrence

    psi_n = sqrt(2/n) r psi_(n-1) - sqrt((n-1)/n) psi_(n-2)

run on rescaled values with a per-point logarithmic scale, so large ``n`` and
large ``r`` neither overflow nor underflow prematurely.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)


def hermite_functions(nmax: int, r: ArrayLike) -> NDArray[np.float64]:
    """Return ``psi_n(r)`` for ``n = 0..nmax`` as an array of shape ``(nmax+1, len(r))``."""
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty((nmax + 1, r.size))
    # psi_0 = (4/pi)^(1/4) exp(-r^2/2); carried as 1 * exp(scale)
    scale = 0.25 * np.log(4.0 / np.pi) - 0.5 * r * r
    prev = np.zeros_like(r)
    cur = np.ones_like(r)
    out[0] = np.exp(scale)
    for n in range(1, nmax + 1):
        nxt = np.sqrt(2.0 / n) * r * cur - np.sqrt((n - 1) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            prev[big] /= _RESCALE
            cur[big] /= _RESCALE
            scale[big] += _LOG_RESCALE
        with np.errstate(divide="ignore"):
            out[n] = np.sign(cur) * np.exp(scale + np.log(np.abs(cur)))
    return out


def odd_hermite_functions(count: int, r: ArrayLike) -> NDArray[np.float64]:
    """``Phi_k(r)`` for ``k = 0..count-1``."""
    psi = hermite_functions(2 * count - 1, r)
    return psi[1::2]


def odd_hermite_derivatives(count: int, r: ArrayLike) -> NDArray[np.float64]:
    """``Phi_k'(r)`` for ``k = 0..count-1``.

    Uses ``psi_n' = sqrt(n/2) psi_(n-1) - sqrt((n+1)/2) psi_(n+1)``.
    """
    psi = hermite_functions(2 * count, r)
    k = np.arange(count)[:, None]
    return np.sqrt((2 * k + 1) / 2.0) * psi[0:2 * count:2] - np.sqrt(k + 1.0) * psi[2:2 * count + 1:2]


def odd_hermite_with_derivatives(count: int, r: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    psi = hermite_functions(2 * count, r)
    k = np.arange(count)[:, None]
    values = psi[1::2][:count]
    derivs = np.sqrt((2 * k + 1) / 2.0) * psi[0:2 * count:2] - np.sqrt(k + 1.0) * psi[2:2 * count + 1:2]
    return values, derivs
