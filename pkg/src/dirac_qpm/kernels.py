"""Exact scalar building blocks for the Hermite-basis pencil.

Notation, with ``Phi_k`` the odd Hermite functions of :mod:`dirac_qpm.hermite`::

    T1 = <Phi_k, Phi_j>          T2 = <Phi_k', Phi_j>        T3 = <Phi_k / r, Phi_j>
    T4 = <Phi_k', Phi_j'>        T5 = <Phi_k' / r, Phi_j>    T6 = <Phi_k / r^2, Phi_j>
    F1 = <phi Phi_k, Phi_j>      F2 = <phi^2 Phi_k, Phi_j>
    F3 = <phi Phi_k / r, Phi_j>  F4 = <phi Phi_k', Phi_j>

    E1(beta) = <r^-beta Phi_k', Phi_j>,   E2(alpha) = <r^-alpha Phi_k, Phi_j>
    E3(m, n) = <psi_m / (1 + r^2), psi_n>, E4(m, n) = <r psi_m / (1 + r^2), psi_n>

``E3``/``E4`` use raw Hermite degrees ``m, n``; everything else uses odd-basis
indices.  All closed forms are written in terms of the running product
``P(n)`` so that no factorial-sized normalisation constant is ever formed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray
from scipy.linalg import eigh_tridiagonal

from .hermite import hermite_functions, odd_hermite_functions
from .problem import PotentialSpec, Variant

SQRT_PI = math.sqrt(math.pi)

# The E3/E4 recursions run in extended precision; beyond RECURSION_LIMIT
# (raw degree) the "auto" method switches to a fixed quadrature rule for speed.
WORKING_DIGITS = 50
RECURSION_LIMIT = 160


class KernelError(ValueError):
    pass


# --------------------------------------------------------------------------
# P(n) and the half-line Hermite overlap I(m, n)


def p_product(n: int) -> float:
    """``P(n) = prod_{l=1..n} (1 + 1/(2l))`` with ``P(0) = 1``."""
    if n < 0:
        raise KernelError("P(n) needs n >= 0")
    if n > 1000:
        return math.exp(math.fsum(math.log1p(0.5 / l) for l in range(1, n + 1)))
    p = 1.0
    for l in range(1, n + 1):
        p *= 1.0 + 0.5 / l
    return p


@lru_cache(maxsize=32)
def p_products(nmax: int) -> NDArray[np.float64]:
    """``P(0..nmax)`` as a read-only array."""
    l = np.arange(1, nmax + 1)
    out = np.concatenate([[1.0], np.exp(np.cumsum(np.log1p(0.5 / l)))])
    out.flags.writeable = False
    return out


def hermite_overlap(m: int, n: int) -> float:
    """``I(m, n) = int_0^inf psi_m psi_n dr``."""
    if m < 0 or n < 0:
        raise KernelError("Hermite degrees must be non-negative")
    if (m - n) % 2 == 0:
        return 1.0 if m == n else 0.0
    if m % 2:
        m, n = n, m
    k, j = m // 2, (n - 1) // 2
    sign = -1.0 if (k - j) % 2 == 0 else 1.0
    return sign * math.sqrt(2.0 * p_product(k) * p_product(j)) / ((2 * k - 2 * j - 1) * math.sqrt(math.pi * (2 * k + 1)))


def overlap_table(size: int) -> NDArray[np.float64]:
    """``I(m, n)`` for ``m, n < size``."""
    m = np.arange(size)
    out = np.zeros((size, size))
    np.fill_diagonal(out, 1.0)
    ev, od = m[m % 2 == 0], m[m % 2 == 1]
    if od.size:
        p = p_products(size)
        k = (ev // 2)[:, None]
        j = ((od - 1) // 2)[None, :]
        sign = np.where((k - j) % 2 == 0, -1.0, 1.0)
        block = sign * np.sqrt(2.0 * p[k] * p[j]) / ((2 * k - 2 * j - 1) * np.sqrt(np.pi * (2 * k + 1)))
        out[np.ix_(ev, od)] = block
        out[np.ix_(od, ev)] = block.T
    return out


# --------------------------------------------------------------------------
# T-terms


def _sign(e: int) -> float:
    return -1.0 if e % 2 else 1.0


def t_term(which: int, k: int, j: int) -> float:
    """Closed-form ``T_which(k, j)``."""
    if which not in range(1, 7):
        raise KernelError(f"T-term index must be 1..6, got {which}")
    if k < 0 or j < 0:
        raise KernelError("basis indices must be non-negative")
    if which == 1:
        return 1.0 if k == j else 0.0
    if which == 2:
        d = k - j
        return 4.0 * _sign(d + 1) * d / (SQRT_PI * (2 * d - 1) * (2 * d + 1)) * math.sqrt(p_product(j) * p_product(k))
    if which == 3:
        s = math.fsum(p_product(m) / ((2 * m + 1) * (2 * m - 2 * j - 1)) for m in range(k + 1))
        return 2.0 * _sign(k - j + 1) * math.sqrt(p_product(j) / p_product(k)) / SQRT_PI * s
    if which == 4:
        if j == k:
            return 0.5 * (4 * k + 3)
        if j == k - 1:
            return -0.5 * math.sqrt(2 * k * (2 * k + 1))
        if j == k + 1:
            return -0.5 * math.sqrt((2 * k + 2) * (2 * k + 3))
        return 0.0
    if which == 5:
        if k < j:
            return 2.0 * _sign(j - k) * math.sqrt(p_product(k) / p_product(j))
        return 1.0 if k == j else 0.0
    lo, hi = min(k, j), max(k, j)
    return 2.0 * _sign(j - k) * math.sqrt(p_product(lo) / p_product(hi))


def t_tables(size: int) -> tuple[NDArray[np.float64], ...]:
    """``(T1, ..., T6)`` over ``k, j < size``, vectorised."""
    p = p_products(size)
    idx = np.arange(size)
    k, j = idx[:, None], idx[None, :]
    d = k - j
    parity = np.where(d % 2 == 0, 1.0, -1.0)

    t1 = np.eye(size)
    t2 = -parity * 4.0 * d / (SQRT_PI * (2 * d - 1) * (2 * d + 1)) * np.sqrt(p[j] * p[k])

    # running sum over m <= k, one column per j
    m = idx[:, None]
    terms = p[m] / ((2 * m + 1) * (2 * m - 2 * j - 1))
    partial = np.cumsum(terms, axis=0)
    t3 = -parity * 2.0 * np.sqrt(p[j] / p[k]) / SQRT_PI * partial

    t4 = np.diag(0.5 * (4 * idx + 3.0))
    if size > 1:
        off = -0.5 * np.sqrt((2 * idx[:-1] + 2.0) * (2 * idx[:-1] + 3.0))
        t4 += np.diag(off, 1) + np.diag(off, -1)

    ratio = np.sqrt(p[np.minimum(k, j)] / p[np.maximum(k, j)])
    t5 = np.where(k < j, 2.0 * parity * ratio, 0.0) + np.eye(size)
    t6 = 2.0 * parity * ratio
    return t1, t2, t3, t4, t5, t6


# --------------------------------------------------------------------------
# Power-law kernels E1, E2


def e2_gamma_sum(alpha: float, k: int, j: int) -> float:
    """``E2`` through the explicit double Gamma sum of the Hermite series.

    ``Phi_k = sum_n S_n(k) r^(2n+1) exp(-r^2/2)`` and the monomial integrals are
    ``Gamma((3 - alpha)/2 + m + p) / 2``.  The terms alternate and grow
    factorially, so double precision only holds for small indices (a few
    units below 1e-9 up to about k, j = 8).  Use :func:`e2_table` otherwise.
    """
    _check_alpha(alpha)

    def log_s(n: int, kk: int) -> float:
        log_c2 = 2 * kk * math.log(2.0) + math.lgamma(2 * kk + 2) + 0.5 * math.log(math.pi)
        return -0.5 * log_c2 + math.lgamma(2 * kk + 2) + (2 * n + 1) * math.log(2.0) - math.lgamma(kk - n + 1) - math.lgamma(2 * n + 2)

    terms = []
    for m in range(k + 1):
        lm = log_s(m, k)
        for p in range(j + 1):
            sign = _sign(k - m + j - p)
            terms.append(sign * math.exp(lm + log_s(p, j) + math.lgamma(0.5 * (3.0 - alpha) + m + p) - math.log(2.0)))
    return math.fsum(terms)


def _check_alpha(alpha: float) -> None:
    if not -1.0 <= alpha <= 2.0:
        raise KernelError(f"E2 exponent must lie in [-1, 2], got {alpha}")


@lru_cache(maxsize=64)
def laguerre_rule(n: int, a: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Generalised Gauss-Laguerre nodes and *scaled* weights for ``t^a e^-t``.

    The returned weights are ``w_i / (t_i^a e^-t_i)``, computed from the
    Christoffel function of the orthonormal Laguerre functions with a rescaled
    recurrence, so they neither underflow nor overflow for large ``n``.
    """
    k = np.arange(n)
    diag = 2.0 * k + a + 1.0
    off = np.sqrt(k[1:] * (k[1:] + a))
    t = eigh_tridiagonal(diag, off, eigvals_only=True)

    log_scale = 0.5 * a * np.log(t) - 0.5 * t - 0.5 * math.lgamma(a + 1.0)
    prev = np.zeros_like(t)
    cur = np.ones_like(t)
    acc = np.ones_like(t)
    big = 1e150
    for kk in range(n - 1):
        nxt = ((t - (2 * kk + a + 1.0)) * cur - math.sqrt(kk * (kk + a)) * prev) / math.sqrt((kk + 1) * (kk + 1 + a))
        prev, cur = cur, nxt
        acc += cur * cur
        over = np.abs(cur) > big
        if over.any():
            prev[over] /= big
            cur[over] /= big
            acc[over] /= big * big
            log_scale[over] += math.log(big)
    weights = np.exp(-2.0 * log_scale - np.log(acc))
    t.flags.writeable = False
    weights.flags.writeable = False
    return t, weights


def e2_table(alpha: float, size: int) -> NDArray[np.float64]:
    """``E2(alpha, k, j)`` for ``k, j < size``.

    With ``t = r^2`` the integrand is ``t^((1-alpha)/2) p_k(t) p_j(t) e^-t / 2``
    for polynomials ``p_k`` of degree ``k``; a Gauss-Laguerre rule with
    ``size + 1`` nodes integrates it exactly.
    """
    _check_alpha(alpha)
    a = 0.5 * (1.0 - alpha)
    t, w = laguerre_rule(size + 1, a)
    r = np.sqrt(t)
    phi = odd_hermite_functions(size, r)
    weighted = phi * (0.5 * w * t ** (-(1.0 + alpha) / 2.0))
    out = weighted @ phi.T
    return 0.5 * (out + out.T)


def e2_subcoulomb(alpha: float, k: int, j: int) -> float:
    if k < 0 or j < 0:
        raise KernelError("basis indices must be non-negative")
    return float(e2_table(alpha, max(k, j) + 1)[k, j])


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise KernelError(f"E1 exponent must lie in [0, 1], got {beta}")


def e1_from_e2(e2_plus: NDArray[np.float64], e2_minus: NDArray[np.float64]) -> NDArray[np.float64]:
    """``E1(beta)`` from ``E2(beta + 1)`` and ``E2(beta - 1)`` tables.

    ``E1(k, j) = (2k+1) E2+(k, j) + sqrt(2(2k+1)k) E2+(k-1, j) - E2-(k, j)``;
    the derivative falls on the *first* index, so the shifted term runs over ``k``.
    """
    size = e2_plus.shape[0]
    k = np.arange(size)[:, None]
    shifted = np.zeros_like(e2_plus)
    shifted[1:] = e2_plus[:-1]
    return (2 * k + 1) * e2_plus + np.sqrt(2.0 * (2 * k + 1) * k) * shifted - e2_minus


def e1_table(beta: float, size: int) -> NDArray[np.float64]:
    _check_beta(beta)
    return e1_from_e2(e2_table(beta + 1.0, size), e2_table(beta - 1.0, size))


def e1_subcoulomb(beta: float, k: int, j: int) -> float:
    if k < 0 or j < 0:
        raise KernelError("basis indices must be non-negative")
    return float(e1_table(beta, max(k, j) + 1)[k, j])


# --------------------------------------------------------------------------
# Inverse-harmonic kernels E3, E4


@dataclass(frozen=True)
class ETable:
    """``E3``/``E4`` over raw Hermite degrees ``0..max_m`` by ``0..max_n``."""

    e3: NDArray[np.float64]
    e4: NDArray[np.float64]
    method: str = "recursion"

    @property
    def extent(self) -> tuple[int, int]:
        return self.e3.shape[0] - 1, self.e3.shape[1] - 1


@lru_cache(maxsize=4)
def e34_seeds(digits: int = WORKING_DIGITS) -> tuple[mpmath.mpf, mpmath.mpf]:
    """``E3(0, 0)``, ``E4(0, 0)`` by direct quadrature of their defining integrals."""
    with mpmath.workdps(digits):
        norm = 2 / mpmath.sqrt(mpmath.pi)
        e3 = norm * mpmath.quad(lambda r: mpmath.exp(-r * r) / (1 + r * r), [0, 1, 4, mpmath.inf])
        e4 = norm * mpmath.quad(lambda r: r * mpmath.exp(-r * r) / (1 + r * r), [0, 1, 4, mpmath.inf])
    return e3, e4


def _mp_overlap(size: int) -> list[list[mpmath.mpf]]:
    p = [mpmath.mpf(1)]
    for l in range(1, size):
        p.append(p[-1] * (1 + mpmath.mpf(1) / (2 * l)))
    out = [[mpmath.mpf(0)] * size for _ in range(size)]
    for m in range(size):
        out[m][m] = mpmath.mpf(1)
        for n in range(m + 1, size, 2):
            k, j = (m // 2, (n - 1) // 2) if m % 2 == 0 else (n // 2, (m - 1) // 2)
            sign = -1 if (k - j) % 2 == 0 else 1
            val = sign * mpmath.sqrt(2 * p[k] * p[j] / (mpmath.pi * (2 * k + 1))) / (2 * k - 2 * j - 1)
            out[m][n] = out[n][m] = val
    return out


def _e34_recursion(max_m: int, max_n: int) -> tuple[NDArray, NDArray]:
    # r psi_m = sqrt((m+1)/2) psi_(m+1) + sqrt(m/2) psi_(m-1) gives
    #   E4(m, n)          = sqrt((m+1)/2) E3(m+1, n) + sqrt(m/2) E3(m-1, n)
    #   I(m, n) - E3(m, n) = sqrt((m+1)/2) E4(m+1, n) + sqrt(m/2) E4(m-1, n)
    # and the same in the second slot; sweep down column 0, then along each row.
    # Forward recursion amplifies rounding like exp(sqrt(2 m)), hence the extra digits.
    rows, cols = max_m + 1, max_n + 1
    with mpmath.workdps(WORKING_DIGITS):
        overlap = _mp_overlap(max(rows, cols))
        half = [mpmath.sqrt(mpmath.mpf(i) / 2) for i in range(max(rows, cols) + 1)]
        zero = mpmath.mpf(0)
        e3 = [[zero] * cols for _ in range(rows)]
        e4 = [[zero] * cols for _ in range(rows)]
        e3[0][0], e4[0][0] = e34_seeds()
        for m in range(rows - 1):
            b3 = e3[m - 1][0] if m else zero
            b4 = e4[m - 1][0] if m else zero
            e3[m + 1][0] = (e4[m][0] - half[m] * b3) / half[m + 1]
            e4[m + 1][0] = (overlap[m][0] - e3[m][0] - half[m] * b4) / half[m + 1]
        for m in range(rows):
            r3, r4, ov = e3[m], e4[m], overlap[m]
            for n in range(cols - 1):
                b3 = r3[n - 1] if n else zero
                b4 = r4[n - 1] if n else zero
                r3[n + 1] = (r4[n] - half[n] * b3) / half[n + 1]
                r4[n + 1] = (ov[n] - r3[n] - half[n] * b4) / half[n + 1]
        return (
            np.array([[float(v) for v in row] for row in e3]),
            np.array([[float(v) for v in row] for row in e4]),
        )


def _e34_fixed_rule(max_m: int, max_n: int) -> tuple[NDArray, NDArray]:
    # Both integrands are entire in r apart from the poles at +-i, so a composite
    # Gauss-Legendre rule with panels well under the pole distance is spectrally exact.
    degree = max(max_m, max_n)
    radius = math.sqrt(2.0 * degree + 1.0) + 12.0
    panels = int(math.ceil(radius / 0.25))
    x, w = leggauss(24)
    edges = np.linspace(0.0, radius, panels + 1)
    half = 0.5 * np.diff(edges)
    r = ((edges[:-1] + half)[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    psi = hermite_functions(degree, r)
    base = wt / (1.0 + r * r)
    e3 = (psi[: max_m + 1] * base) @ psi[: max_n + 1].T
    e4 = (psi[: max_m + 1] * (base * r)) @ psi[: max_n + 1].T
    return e3, e4


def e34_tables(max_m: int, max_n: int, method: str = "auto") -> ETable:
    """Fill ``E3``/``E4`` up to raw degrees ``max_m``, ``max_n``.

    ``method="recursion"`` runs the three-term recursions from quadrature
    seeds at ``(0, 0)``; ``"quadrature"`` uses a fixed high-order rule;
    ``"auto"`` picks the recursion while both extents stay within
    :data:`RECURSION_LIMIT`.
    """
    if max_m < 0 or max_n < 0:
        raise KernelError("table extents must be non-negative")
    if method == "auto":
        method = "recursion" if max(max_m, max_n) <= RECURSION_LIMIT else "quadrature"
    if method == "recursion":
        e3, e4 = _e34_recursion(max_m, max_n)
    elif method == "quadrature":
        e3, e4 = _e34_fixed_rule(max_m, max_n)
    else:
        raise KernelError(f"unknown E-table method {method!r}")
    for name, tab in (("E3", e3), ("E4", e4)):
        bad = np.argwhere(~np.isfinite(tab))
        if bad.size:
            m, n = bad[0]
            raise KernelError(f"{name} recursion produced a non-finite entry at (m, n) = ({m}, {n})")
    e3.flags.writeable = False
    e4.flags.writeable = False
    return ETable(e3, e4, method)


# --------------------------------------------------------------------------
# Potential-weighted F-terms


def _ih_blocks(size: int, etab: ETable, t3: NDArray) -> tuple[NDArray, ...]:
    need = 2 * size
    ext = etab.extent
    if min(ext) < need:
        raise KernelError(f"E-table extent {ext} too small, need raw degree {need}")
    e3, e4 = etab.e3, etab.e4
    idx = np.arange(size)
    odd = 2 * idx + 1
    ev = 2 * idx
    ev2 = 2 * idx + 2
    a = np.sqrt((2 * idx + 1) / 2.0)[:, None]
    b = np.sqrt(idx + 1.0)[:, None]
    f1 = e3[np.ix_(odd, odd)]
    # 1/(1+r^2)^2 = ((r/(1+r^2))' + 1/(1+r^2)) / 2, then integrate the derivative by parts
    g = a * e4[np.ix_(ev, odd)] - b * e4[np.ix_(ev2, odd)]
    f2 = 0.5 * (f1 - g - g.T)
    f4 = a * e3[np.ix_(ev, odd)] - b * e3[np.ix_(ev2, odd)]
    # 1/(r(1+r^2)) = 1/r - r/(1+r^2)
    f3 = t3 - (a * e3[np.ix_(ev, odd)] + b * e3[np.ix_(ev2, odd)])
    return f1, f2, f3, f4


def f_tables(potential: PotentialSpec, size: int, etab: ETable | None = None) -> tuple[NDArray[np.float64], ...]:
    """``(F1, F2, F3, F4)`` over ``k, j < size``."""
    g = potential.gamma
    v = potential.variant
    if potential.is_free:
        z = np.zeros((size, size))
        return z, z.copy(), z.copy(), z.copy()
    if v is Variant.COULOMB:
        _, _, t3, _, t5, t6 = t_tables(size)
        return g * t3, g * g * t6, g * t6, g * t5
    if v is Variant.SUBCOULOMB:
        beta = potential.beta
        e2_plus = e2_table(beta + 1.0, size)
        return (
            g * e2_table(beta, size),
            g * g * e2_table(2.0 * beta, size),
            g * e2_plus,
            g * e1_from_e2(e2_plus, e2_table(beta - 1.0, size)),
        )
    if v is Variant.INVERSE_HARMONIC:
        if etab is None:
            raise KernelError("inverse-harmonic F-terms need an E-table")
        t3 = t_tables(size)[2]
        f1, f2, f3, f4 = _ih_blocks(size, etab, t3)
        return g * f1, g * g * f2, g * f3, g * f4
    raise KernelError(f"no F-terms for potential {potential.label()}")


def f_terms(potential: PotentialSpec, k: int, j: int, etab: ETable | None = None) -> tuple[float, float, float, float]:
    """``(F1, F2, F3, F4)`` at a single index pair."""
    if k < 0 or j < 0:
        raise KernelError("basis indices must be non-negative")
    size = max(k, j) + 1
    return tuple(float(t[k, j]) for t in f_tables(potential, size, etab))  # type: ignore[return-value]


# --------------------------------------------------------------------------
# Kernel table bundle


@dataclass(frozen=True)
class KernelTable:
    """Every T- and F-table a pencil needs, over ``k, j < size``."""

    potential: PotentialSpec
    size: int
    t: tuple[NDArray[np.float64], ...] = field(repr=False)
    f: tuple[NDArray[np.float64], ...] = field(repr=False)

    def __getattr__(self, name: str) -> NDArray[np.float64]:
        if len(name) == 2 and name[0] in "tf" and name[1].isdigit():
            group = self.t if name[0] == "t" else self.f
            i = int(name[1]) - 1
            if 0 <= i < len(group):
                return group[i]
        raise AttributeError(name)

    def validate(self, tol: float = 1e-10) -> None:
        """Raise :class:`KernelError` on the first violated structural invariant."""
        for name in ("t1", "t2", "t3", "t4", "t5", "t6", "f1", "f2", "f3", "f4"):
            tab = getattr(self, name)
            if not np.all(np.isfinite(tab)):
                k, j = np.argwhere(~np.isfinite(tab))[0]
                raise KernelError(f"{name} has a non-finite entry at ({k}, {j})")
        if not np.array_equal(self.t1, np.eye(self.size)):
            raise KernelError("t1 is not the identity")
        if np.any(np.diag(self.t2) != 0.0) or not np.allclose(self.t2, -self.t2.T, rtol=0, atol=tol):
            raise KernelError("t2 is not antisymmetric")
        for name in ("t3", "t4", "t6", "f1", "f2", "f3"):
            tab = getattr(self, name)
            scale = max(1.0, float(np.abs(tab).max()))
            if not np.allclose(tab, tab.T, rtol=0, atol=tol * scale):
                k, j = np.unravel_index(np.argmax(np.abs(tab - tab.T)), tab.shape)
                raise KernelError(f"{name} is not symmetric at ({k}, {j})")
        if np.any(np.tril(self.t5, -1) != 0.0):
            raise KernelError("t5 is non-zero below the diagonal")

    def dump_csv(self, name: str, path: str | Path) -> None:
        write_table_csv(getattr(self, name), path)


@lru_cache(maxsize=16)
def build_kernel_table(potential: PotentialSpec, size: int) -> KernelTable:
    """Assemble and freeze all kernel tables for ``k, j < size``."""
    if size < 1:
        raise KernelError("kernel tables need size >= 1")
    t = t_tables(size)
    etab = None
    if potential.variant is Variant.INVERSE_HARMONIC and not potential.is_free:
        etab = e34_tables(2 * size, 2 * size)
    f = f_tables(potential, size, etab)
    for arr in (*t, *f):
        arr.flags.writeable = False
    return KernelTable(potential, size, t, f)


def write_table_csv(table: NDArray[np.float64], path: str | Path) -> None:
    """Row-major ``k,j,value`` dump at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "j", "value"])
        for (k, j), v in np.ndenumerate(table):
            w.writerow([k, j, f"{v:.17g}"])
