"""Adaptive quadrature oracle for the Hermite-basis integrals.

This is the independent check on every closed form in :mod:`dirac_qpm.kernels`.
It only ever evaluates basis functions pointwise (see :mod:`dirac_qpm.hermite`)
and integrates them numerically; it never touches a closed form.

The integration is split at ``r = SPLIT`` near the origin.  The inner piece
uses Gauss-Jacobi nodes with the integrand's leading power ``r^p`` as weight;
the outer piece uses Gauss-Legendre panels refined by bisection until the
panel and its two halves agree.  Integrands may be vector valued (shape
``(..., len(r))``), in which case refinement is driven by the worst component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray
from scipy.special import roots_jacobi

from .hermite import hermite_functions, odd_hermite_with_derivatives
from .problem import PotentialSpec, Variant

SPLIT = 1e-3
ORDER = 15
MAX_DEPTH = 48
MAX_PANELS = 200_000

Integrand = Callable[[NDArray[np.float64]], NDArray[np.float64]]


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _legendre(order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return leggauss(order)


@lru_cache(maxsize=None)
def _jacobi(order: int, power: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x, w = roots_jacobi(order, 0.0, power)
    return x, w


def _inner(f: Integrand, power: float, delta: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Integral over (0, delta) treating ``f(r) = r^power g(r)`` with smooth ``g``."""
    results = []
    for order in (20, 30):
        x, w = _jacobi(order, power)
        r = 0.5 * delta * (1.0 + x)
        g = f(r) / r**power
        results.append((0.5 * delta) ** (power + 1.0) * (g @ w))
    return results[1], np.abs(results[1] - results[0])


def adaptive_integrate(
    f: Integrand,
    a: float,
    b: float,
    rel_tol: float = 1e-12,
    initial_panels: int = 16,
    scale: NDArray[np.float64] | float | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Integrate ``f`` over ``[a, b]`` on Gauss-Legendre panels with bisection.

    Returns ``(value, error_estimate)``.  The tolerance is
    ``rel_tol * max(|value|, L1)`` per component, where ``L1`` is the integral
    of ``|f|`` (so identically cancelling integrals still terminate).
    """
    x, w = _legendre(ORDER)
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]

    def panel_sums(lo: NDArray, hi: NDArray) -> tuple[NDArray, NDArray]:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = f(nodes)
        vals = vals.reshape(vals.shape[:-1] + (lo.size, ORDER))
        integral = (vals * w).sum(axis=-1) * half
        absint = (np.abs(vals) * w).sum(axis=-1) * half
        return integral, absint

    whole, absw = panel_sums(lo, hi)
    if scale is None:
        scale = np.maximum(np.abs(whole.sum(axis=-1)), absw.sum(axis=-1))
    scale = np.asarray(scale, dtype=float)
    budget = rel_tol * np.maximum(scale, np.finfo(float).tiny)

    total = np.zeros(whole.shape[:-1])
    error = np.zeros(whole.shape[:-1])
    length = b - a
    panels = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        left, _ = panel_sums(lo, mid)
        right, _ = panel_sums(mid, hi)
        refined = left + right
        diff = np.abs(refined - whole)
        share = (hi - lo) / length
        ok = np.all(diff <= budget[..., None] * share, axis=tuple(range(diff.ndim - 1)))
        total = total + refined[..., ok].sum(axis=-1)
        error = error + diff[..., ok].sum(axis=-1)
        panels += lo.size
        if ok.all():
            break
        if panels > MAX_PANELS or np.min(hi[~ok] - lo[~ok]) < length * 2.0**-MAX_DEPTH:
            raise QuadratureError("adaptive quadrature did not converge within the refinement bound")
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[..., keep], right[..., keep]], axis=-1)
    return total, error


# --------------------------------------------------------------------------
# integrand catalogue


@dataclass(frozen=True)
class KernelIntegrand:
    """A catalogued integrand: callable, leading power at the origin, highest Hermite degree used."""

    func: Integrand
    power: float
    max_degree: int


def _phi_pair(k: int, j: int, r: NDArray) -> tuple[NDArray, NDArray, NDArray, NDArray]:
    vals, ders = odd_hermite_with_derivatives(max(k, j) + 1, r)
    return vals[k], vals[j], ders[k], ders[j]


def kernel_integrand(
    kernel: str,
    k: int,
    j: int,
    potential: PotentialSpec | None = None,
    alpha: float | None = None,
) -> KernelIntegrand:
    """Return the integrand of a named kernel.

    ``t1``..``t6``, ``f1``..``f4``, ``e1`` (``alpha`` is the exponent beta),
    ``e2`` (exponent ``alpha``) take odd-basis indices ``k, j``;
    ``i``, ``e3``, ``e4`` take raw Hermite degrees.
    """
    kernel = kernel.lower()
    if k < 0 or j < 0:
        raise ValueError("indices must be non-negative")
    if kernel in ("i", "e3", "e4"):
        m, n = k, j

        def raw(r: NDArray) -> tuple[NDArray, NDArray]:
            psi = hermite_functions(max(m, n), r)
            return psi[m], psi[n]

        power = float((m % 2) + (n % 2))
        if kernel == "i":
            return KernelIntegrand(lambda r: np.multiply(*raw(r)), power, max(m, n))
        if kernel == "e3":
            return KernelIntegrand(lambda r: np.multiply(*raw(r)) / (1.0 + r * r), power, max(m, n))
        return KernelIntegrand(lambda r: r * np.multiply(*raw(r)) / (1.0 + r * r), power + 1.0, max(m, n))

    deg = 2 * max(k, j) + 2
    if kernel == "t1":
        def t1(r):
            a, b, _, _ = _phi_pair(k, j, r)
            return a * b
        return KernelIntegrand(t1, 2.0, deg)
    if kernel == "t2":
        def t2(r):
            a, b, da, _ = _phi_pair(k, j, r)
            return da * b
        return KernelIntegrand(t2, 1.0, deg)
    if kernel == "t3":
        def t3(r):
            a, b, _, _ = _phi_pair(k, j, r)
            return a * b / r
        return KernelIntegrand(t3, 1.0, deg)
    if kernel == "t4":
        def t4(r):
            _, _, da, db = _phi_pair(k, j, r)
            return da * db
        return KernelIntegrand(t4, 0.0, deg)
    if kernel == "t5":
        def t5(r):
            _, b, da, _ = _phi_pair(k, j, r)
            return da * b / r
        return KernelIntegrand(t5, 0.0, deg)
    if kernel == "t6":
        def t6(r):
            a, b, _, _ = _phi_pair(k, j, r)
            return a * b / (r * r)
        return KernelIntegrand(t6, 0.0, deg)
    if kernel == "e2":
        if alpha is None:
            raise ValueError("e2 needs alpha")

        def e2(r):
            a, b, _, _ = _phi_pair(k, j, r)
            return a * b * r**-alpha
        return KernelIntegrand(e2, 2.0 - alpha, deg)
    if kernel == "e1":
        if alpha is None:
            raise ValueError("e1 needs beta (passed as alpha)")

        def e1(r):
            _, b, da, _ = _phi_pair(k, j, r)
            return da * b * r**-alpha
        return KernelIntegrand(e1, 1.0 - alpha, deg)
    if kernel in ("f1", "f2", "f3", "f4"):
        if potential is None:
            raise ValueError(f"kernel {kernel} needs a potential")
        phi = potential
        lead = _potential_power(potential)
        if kernel == "f1":
            def f1(r):
                a, b, _, _ = _phi_pair(k, j, r)
                return phi(r) * a * b
            return KernelIntegrand(f1, 2.0 + lead, deg)
        if kernel == "f2":
            def f2(r):
                a, b, _, _ = _phi_pair(k, j, r)
                return phi(r) ** 2 * a * b
            return KernelIntegrand(f2, 2.0 + 2 * lead, deg)
        if kernel == "f3":
            def f3(r):
                a, b, _, _ = _phi_pair(k, j, r)
                return phi(r) * a * b / r
            return KernelIntegrand(f3, 1.0 + lead, deg)

        def f4(r):
            _, b, da, _ = _phi_pair(k, j, r)
            return phi(r) * da * b
        return KernelIntegrand(f4, 1.0 + lead, deg)
    raise ValueError(f"unknown kernel {kernel!r}")


def _potential_power(potential: PotentialSpec) -> float:
    if potential.variant is Variant.COULOMB:
        return -1.0
    if potential.variant is Variant.SUBCOULOMB:
        return -potential.beta
    return 0.0


def truncation_radius(max_degree: int) -> float:
    """Cut-off beyond which every Hermite function up to ``max_degree`` is negligible."""
    # Phi_k turning point is sqrt(4k+3) = sqrt(2*deg+1) for deg = 2k+1
    return max(12.0, 2.0 * math.sqrt(2.0 * max_degree + 1.0))


def integrate_kernel(spec: KernelIntegrand, rel_tol: float = 1e-12) -> tuple[NDArray, NDArray]:
    if not 1e-14 < rel_tol < 1e-4:
        raise ValueError("rel_tol must lie in (1e-14, 1e-4)")
    radius = truncation_radius(spec.max_degree)
    inner, inner_err = _inner(spec.func, spec.power, SPLIT)
    panels = max(16, int(radius / 0.5))
    outer, outer_err = adaptive_integrate(spec.func, SPLIT, radius, rel_tol=rel_tol, initial_panels=panels)
    tail = np.abs(spec.func(np.array([radius]))[..., 0])
    value = inner + outer
    if np.any(tail > rel_tol * np.maximum(np.abs(value), 1.0)):
        raise QuadratureError("integrand not negligible at the truncation radius")
    return value, inner_err + outer_err


def quadrature_oracle(
    kernel: str,
    k: int,
    j: int,
    potential: PotentialSpec | None = None,
    alpha: float | None = None,
    rel_tol: float = 1e-12,
) -> float:
    """Numerically integrate one catalogued kernel entry."""
    value, _ = integrate_kernel(kernel_integrand(kernel, k, j, potential, alpha), rel_tol)
    return float(value)


def oracle_table(
    kernel: str,
    rows: int,
    cols: int,
    potential: PotentialSpec | None = None,
    alpha: float | None = None,
    rel_tol: float = 1e-12,
) -> NDArray[np.float64]:
    """Whole ``rows x cols`` table of a kernel, integrated as one vector-valued integrand."""
    raw = kernel.lower() in ("i", "e3", "e4")
    size = max(rows, cols)
    if raw:
        def vals(r):
            psi = hermite_functions(size - 1, r)
            return psi, None
    else:
        def vals(r):
            return odd_hermite_with_derivatives(size, r)

    phi = potential
    kern = kernel.lower()

    def func(r: NDArray) -> NDArray:
        a, da = vals(r)
        a_r, a_c = a[:rows], a[:cols]
        if kern in ("i", "t1"):
            return a_r[:, None] * a_c[None, :]
        if kern == "e3":
            return a_r[:, None] * a_c[None, :] / (1.0 + r * r)
        if kern == "e4":
            return a_r[:, None] * a_c[None, :] * (r / (1.0 + r * r))
        if kern == "t2":
            return da[:rows, None] * a_c[None, :]
        if kern == "t3":
            return a_r[:, None] * a_c[None, :] / r
        if kern == "t4":
            return da[:rows, None] * da[None, :cols]
        if kern == "t5":
            return da[:rows, None] * a_c[None, :] / r
        if kern == "t6":
            return a_r[:, None] * a_c[None, :] / (r * r)
        if kern == "e2":
            return a_r[:, None] * a_c[None, :] * r**-alpha
        if kern == "e1":
            return da[:rows, None] * a_c[None, :] * r**-alpha
        p = phi(r)
        if kern == "f1":
            return a_r[:, None] * a_c[None, :] * p
        if kern == "f2":
            return a_r[:, None] * a_c[None, :] * p * p
        if kern == "f3":
            return a_r[:, None] * a_c[None, :] * p / r
        if kern == "f4":
            return da[:rows, None] * a_c[None, :] * p
        raise ValueError(f"unknown kernel {kernel!r}")

    # every odd-basis entry shares the (0, 0) leading power; raw tables mix parities
    if raw:
        spec = KernelIntegrand(func, 0.0, size - 1)
    else:
        spec = KernelIntegrand(func, kernel_integrand(kernel, 0, 0, potential, alpha).power, 2 * size + 1)
    value, _ = integrate_kernel(spec, rel_tol)
    return value
