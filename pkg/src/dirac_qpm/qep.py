"""Second-order spectrum of the pencil ``Q(z) = B z^2 - 2 z L + K``.

Points come from the first companion form ``[[0, I], [-K, 2L]]`` (``B = I``).
Because ``Q(x) = (x - L)^2 + (K - L^2)`` is positive semidefinite for real
``x``, every real point of the spectrum is a double root at which ``Q``
touches zero.  A dense eigensolver splits such a root into two points about
``sqrt(eps)`` apart.  Those splits are detected and merged back onto the
real axis: a near-real cluster is replaced by its mean whenever ``Q`` is
singular there to working precision (see :func:`second_order_spectrum`).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .assembly import PencilTriple
from .hermite import odd_hermite_functions
from .problem import BasisSpec

PAIR_TOL = 1e-8
REAL_TOL = 1e-10
# a split double root spreads over about sqrt(eps * ||K||); clusters narrower
# than SPLIT_WIDTH * sqrt(||K||) are candidates for merging onto the real axis
SPLIT_WIDTH = 1e-6
# Q(x) counts as singular when its smallest eigenvalue is below this times its
# scale; complex pairs with |Im| below roughly sqrt(SINGULAR_TOL * scale) are
# indistinguishable from split real roots in double precision
SINGULAR_TOL = 100 * np.finfo(float).eps


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SecondOrderPoint:
    """One point ``lambda`` of the second-order spectrum with unit coefficient vector."""

    value: complex
    coeffs: NDArray[np.complex128] = field(repr=False)
    index: int = -1
    conjugate_partner: int | None = None
    residual: float = float("nan")

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag


@dataclass(frozen=True)
class Enclosure:
    center: float
    radius: float
    source: SecondOrderPoint | None = None

    def __post_init__(self) -> None:
        if not self.radius >= 0.0:
            raise ValueError("enclosure radius must be non-negative")

    @property
    def lower(self) -> float:
        return self.center - self.radius

    @property
    def upper(self) -> float:
        return self.center + self.radius

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack

    def intersects(self, lo: float, hi: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= hi and lo <= self.upper + slack


@dataclass(frozen=True)
class RadialSpinor:
    grid: NDArray[np.float64]
    upper: NDArray
    lower: NDArray
    coeffs: NDArray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        g = self.grid
        if g.ndim != 1 or g.size == 0:
            raise ValueError("grid must be a non-empty 1-d array")
        if np.any(g <= 0.0) or np.any(np.diff(g) <= 0.0):
            raise ValueError("grid radii must be positive and strictly increasing")
        if self.upper.shape != g.shape or self.lower.shape != g.shape:
            raise ValueError("component arrays must match the grid")

    def norm(self) -> float:
        dens = np.abs(self.upper) ** 2 + np.abs(self.lower) ** 2
        return float(np.sqrt(np.trapezoid(dens, self.grid)))


# --------------------------------------------------------------------------
# spectrum


def pencil_scale(triple: PencilTriple, z: complex) -> float:
    """``||K|| + |z| ||2L|| + |z|^2 ||B||`` in the 2-norm."""
    nk = np.linalg.norm(triple.k_matrix, 2)
    nl = np.linalg.norm(triple.l_matrix, 2)
    return float(nk + 2.0 * abs(z) * nl + abs(z) ** 2)


def _extract(vec: NDArray, lam: complex, n: int) -> NDArray[np.complex128]:
    top = vec[:n]
    if np.linalg.norm(top) < 1e-8 * np.linalg.norm(vec) and lam != 0:
        top = vec[n:] / lam
    return _normalise(top)


def _normalise(v: NDArray) -> NDArray[np.complex128]:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    big = np.argmax(np.abs(v))
    return v * (abs(v[big]) / v[big])


def _merge_real_splits(triple: PencilTriple, lam: NDArray, vecs: list[NDArray], scale: float) -> None:
    """Move split double roots back onto the real axis, in place."""
    width = SPLIT_WIDTH * np.sqrt(max(1.0, scale))
    near = np.flatnonzero(np.abs(lam.imag) <= width)
    if near.size < 2:
        return
    order = near[np.argsort(lam.real[near])]
    clusters: list[list[int]] = [[order[0]]]
    for i in order[1:]:
        if lam.real[i] - lam.real[clusters[-1][-1]] <= width:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    for members in clusters:
        if len(members) < 2 or len(members) % 2:
            continue
        x = float(np.mean(lam.real[members]))
        q = triple.quadratic(x).real
        w, v = np.linalg.eigh(q)
        mult = len(members) // 2
        if abs(w[mult - 1]) > SINGULAR_TOL * pencil_scale(triple, x):
            continue  # genuine complex pair close to the axis
        for rank, pair in enumerate(zip(members[0::2], members[1::2])):
            null = v[:, rank]
            for i in pair:
                lam[i] = x
                vecs[i] = _normalise(null)


def second_order_spectrum(triple: PencilTriple) -> list[SecondOrderPoint]:
    """All ``2n`` points of the second-order spectrum, closed under conjugation."""
    n = triple.dim
    if n == 0:
        raise SolverError("empty pencil")
    comp = np.zeros((2 * n, 2 * n))
    comp[:n, n:] = np.eye(n)
    comp[n:, :n] = -triple.k_matrix
    comp[n:, n:] = 2.0 * triple.l_matrix
    try:
        lam, x = sla.eig(comp, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"companion eigensolver failed: {exc}") from exc
    lam = np.asarray(lam, dtype=complex)
    vecs = [_extract(x[:, i], lam[i], n) for i in range(2 * n)]
    scale = pencil_scale(triple, 0.0)
    _merge_real_splits(triple, lam, vecs, scale)

    partners = _pair_conjugates(lam)
    v = np.array(vecs).T
    res = np.linalg.norm(v * lam**2 - 2.0 * (triple.l_matrix @ v) * lam + triple.k_matrix @ v, axis=0)
    return [SecondOrderPoint(complex(lam[i]), vecs[i], i, partners[i], float(res[i])) for i in range(2 * n)]


def _pair_conjugates(lam: NDArray[np.complex128]) -> list[int | None]:
    # greedy nearest match on (Re, |Im|); exact real points and merged copies pair up too
    partners: list[int | None] = [None] * lam.size
    order = np.argsort(-np.abs(lam.imag), kind="stable")
    free = np.ones(lam.size, dtype=bool)
    for i in order:
        if not free[i]:
            continue
        free[i] = False
        dist = np.where(free, np.abs(lam - np.conj(lam[i])), np.inf)
        best = int(np.argmin(dist))
        if dist[best] <= PAIR_TOL * max(1.0, abs(lam[i])):
            partners[i], partners[best] = best, int(i)
            free[best] = False
        elif abs(lam[i].imag) < REAL_TOL:
            partners[i] = int(i)
    return partners


def check_conjugation(points: list[SecondOrderPoint]) -> None:
    for p in points:
        if p.conjugate_partner is None:
            raise SolverError(f"point {p.index} ({p.value}) has no conjugate partner")
        q = points[p.conjugate_partner]
        if abs(np.conj(p.value) - q.value) > PAIR_TOL * max(1.0, abs(p.value)):
            raise SolverError(f"point {p.index} and its partner {q.index} are not conjugate")


def filter_points(points: list[SecondOrderPoint], window: tuple[float, float], max_imag: float) -> list[SecondOrderPoint]:
    """One representative per conjugate pair, ``Im >= 0``, inside the window and strip."""
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must be a non-empty interval")
    if not max_imag > 0.0:
        raise ValueError("max_imag must be positive")
    kept, seen = [], set()
    for p in points:
        if p.index in seen:
            continue
        partner = p.conjugate_partner
        if p.imag < 0.0 and partner is not None and partner != p.index:
            continue
        seen.add(p.index)
        if partner is not None:
            seen.add(partner)
        if lo < p.real < hi and abs(p.imag) <= max_imag:
            kept.append(p)
    kept.sort(key=lambda p: (p.real, abs(p.imag)))
    return kept


def enclosure(point: SecondOrderPoint) -> Enclosure:
    return Enclosure(point.real, abs(point.imag), point)


def sharpened_radius(point: SecondOrderPoint | complex, d_e: float) -> float:
    """``min(|Im|, 2 |Im|^2 / d_e)`` for a caller-supplied gap ``d_e > 0``."""
    if not d_e > 0.0:
        raise ValueError("d_e must be positive")
    im = abs(point.imag)
    return min(im, 2.0 * im * im / d_e)


# --------------------------------------------------------------------------
# eigenfunctions


def eigenfunction(point: SecondOrderPoint | ArrayLike, basis: BasisSpec, grid: ArrayLike) -> RadialSpinor:
    coeffs = point.coeffs if isinstance(point, SecondOrderPoint) else np.asarray(point)
    if coeffs.shape != (basis.dim,):
        raise ValueError(f"coefficient vector has length {coeffs.shape}, basis needs {basis.dim}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0.0):
        raise ValueError("grid must be a non-empty array of positive radii")
    coeffs = _normalise(coeffs)
    n_up, n_lo = basis.n_upper, basis.n_lower
    phi = odd_hermite_functions(max(n_up, n_lo), grid)
    upper = coeffs[:n_up] @ phi[:n_up]
    lower = coeffs[n_up:] @ phi[:n_lo]
    if np.allclose(coeffs.imag, 0.0):
        coeffs, upper, lower = coeffs.real, upper.real, lower.real
    return RadialSpinor(grid, upper, lower, coeffs)


def subspace_residual(spinor: RadialSpinor, exact_basis: list[RadialSpinor]) -> float:
    """``||v - P v|| / ||v||`` with ``P`` the grid-orthogonal projector onto ``exact_basis``."""
    if not exact_basis:
        raise ValueError("exact basis is empty")
    g = spinor.grid
    for e in exact_basis:
        if e.grid.shape != g.shape or not np.allclose(e.grid, g, rtol=0, atol=0):
            raise ValueError("all spinors must share one grid")
    w = np.zeros_like(g)
    d = np.diff(g)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    stack = np.array([np.concatenate([e.upper, e.lower]) for e in exact_basis])
    v = np.concatenate([spinor.upper, spinor.lower])
    ww = np.concatenate([w, w])
    gram = (stack.conj() * ww) @ stack.T
    if np.linalg.cond(gram) > 1e8:
        raise ValueError("exact basis is degenerate on the grid")
    coef = np.linalg.solve(gram, (stack.conj() * ww) @ v)
    rest = v - coef @ stack
    return float(np.sqrt(np.sum(ww * np.abs(rest) ** 2) / np.sum(ww * np.abs(v) ** 2)))


# --------------------------------------------------------------------------
# CSV output


def write_points_csv(points: list[SecondOrderPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_lambda", "im_lambda", "enclosure_lo", "enclosure_hi"])
        for p in points:
            e = enclosure(p)
            w.writerow([f"{p.real:.17g}", f"{p.imag:.17g}", f"{e.lower:.17g}", f"{e.upper:.17g}"])


def write_spinor_csv(spinor: RadialSpinor, path: str | Path) -> None:
    """Real parts of both components; after the phase fix these carry the spinor."""
    up = np.real(spinor.upper)
    lo = np.real(spinor.lower)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "upper", "lower"])
        for r, a, b in zip(spinor.grid, up, lo):
            w.writerow([f"{r:.17g}", f"{a:.17g}", f"{b:.17g}"])
