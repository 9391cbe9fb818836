"""Pencil matrices by direct quadrature of the differential operator applied to the basis."""

import numpy as np
from scipy.integrate import quad_vec

from dirac_qpm.hermite import odd_hermite_with_derivatives


def applied_basis(problem, basis, r):
    """Components of ``H b_a`` for every basis vector, straight from the differential operator."""
    n_up, n_lo = basis.n_upper, basis.n_lower
    phi, dphi = odd_hermite_with_derivatives(max(n_up, n_lo), r)
    pot = problem.potential(r)
    kappa = problem.kappa
    z_up, z_lo = np.zeros((n_up, r.size)), np.zeros((n_lo, r.size))
    # H = [[1 + phi, -d/dr + kappa/r], [d/dr + kappa/r, -1 + phi]]
    hu_top = (1.0 + pot) * phi[:n_up]
    hu_bot = dphi[:n_up] + kappa * phi[:n_up] / r
    hl_top = -dphi[:n_lo] + kappa * phi[:n_lo] / r
    hl_bot = (-1.0 + pot) * phi[:n_lo]
    top = np.vstack([hu_top, hl_top])
    bot = np.vstack([hu_bot, hl_bot])
    b_top = np.vstack([phi[:n_up], z_lo])
    b_bot = np.vstack([z_up, phi[:n_lo]])
    return top, bot, b_top, b_bot


def quadrature_pencil(problem, basis):
    def integrand(r):
        r = np.array([r])
        top, bot, b_top, b_bot = (a[:, 0] for a in applied_basis(problem, basis, r))
        lmat = np.outer(top, b_top) + np.outer(bot, b_bot)
        kmat = np.outer(top, top) + np.outer(bot, bot)
        return np.concatenate([lmat.ravel(), kmat.ravel()])

    total = 0.0
    for lo, hi in ((0.0, 0.5), (0.5, 2.0), (2.0, 6.0), (6.0, 14.0)):
        val, _ = quad_vec(integrand, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400)
        total = total + val
    n = basis.dim
    return total[: n * n].reshape(n, n), total[n * n :].reshape(n, n)


def entrywise_rel(value, oracle):
    # entries that cancel to zero are measured against a tiny fraction of the matrix scale
    floor = 1e-6 * np.abs(oracle).max()
    return float(np.max(np.abs(value - oracle) / np.maximum(np.abs(oracle), floor)))
