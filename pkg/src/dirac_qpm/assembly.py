"""Pencil matrices ``B, L, K`` for ``H_kappa`` in the odd Hermite basis.

``L[a, b] = <H b_a, b_b>`` and ``K[a, b] = <H b_a, H b_b>`` with the global
basis ordered as in :class:`~dirac_qpm.problem.BasisSpec`.  Both are built
block-wise from the kernel tables; the row index of every block is the
first slot of the inner product.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .kernels import KernelTable, build_kernel_table
from .problem import BasisSpec, PotentialSpec, RadialProblem

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
FORMAT_TAG = "dirac-pencil v1"


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class PencilTriple:
    """``Q(z) = B z^2 - 2 z L + K``; arrays are read-only."""

    b_matrix: NDArray[np.float64]
    l_matrix: NDArray[np.float64]
    k_matrix: NDArray[np.float64]
    basis: BasisSpec
    problem: RadialProblem

    @property
    def dim(self) -> int:
        return self.basis.dim

    def check(self, psd: bool = True) -> None:
        """Raise :class:`AssemblyError` naming the worst entry of any violated invariant."""
        n = self.dim
        for name, mat in (("B", self.b_matrix), ("L", self.l_matrix), ("K", self.k_matrix)):
            if mat.shape != (n, n):
                raise AssemblyError(f"{name} has shape {mat.shape}, expected {(n, n)}")
            if not np.all(np.isfinite(mat)):
                a, b = np.argwhere(~np.isfinite(mat))[0]
                raise AssemblyError(f"{name}[{a}, {b}] is not finite")
        if not np.array_equal(self.b_matrix, np.eye(n)):
            raise AssemblyError("B is not the identity")
        for name, mat in (("L", self.l_matrix), ("K", self.k_matrix)):
            asym = np.abs(mat - mat.T)
            scale = np.abs(mat).max()
            if asym.max() > SYMMETRY_TOL * scale:
                a, b = np.unravel_index(np.argmax(asym), asym.shape)
                raise AssemblyError(f"{name} is not symmetric: |{name}[{a},{b}] - {name}[{b},{a}]| = {asym[a, b]:.3e}")
        if psd:
            k = self.k_matrix
            w = np.linalg.eigvalsh(k)
            if w[0] < -PSD_TOL * max(abs(w[-1]), 1.0):
                raise AssemblyError(f"K is not positive semidefinite: smallest eigenvalue {w[0]:.3e}")

    def quadratic(self, z: complex) -> NDArray[np.complex128]:
        return self.b_matrix * z * z - 2.0 * z * self.l_matrix + self.k_matrix


def _blocks(tab: KernelTable, kappa: int, n_up: int, n_lo: int) -> tuple[NDArray, NDArray]:
    u, w = slice(0, n_up), slice(0, n_lo)
    t1, t2, t3, t4, t5, t6 = tab.t
    f1, f2, f3, f4 = tab.f

    l11 = t1 + f1
    l22 = -t1 + f1
    l12 = t2 + kappa * t3
    l21 = -t2 + kappa * t3
    lmat = np.block([[l11[u, u], l12[u, w]], [l21[w, u], l22[w, w]]])

    t5s = t5 + t5.T
    t2s = t2 + t2.T
    f4a = f4 - f4.T
    k11 = t1 + t4 + kappa * t5s + kappa**2 * t6 + 2.0 * f1 + f2
    k22 = t1 + t4 - kappa * t5s + kappa**2 * t6 - 2.0 * f1 + f2
    k12 = -t2s + 2.0 * kappa * f3 + f4a
    k21 = -t2s + 2.0 * kappa * f3 - f4a
    kmat = np.block([[k11[u, u], k12[u, w]], [k21[w, u], k22[w, w]]])
    return lmat, kmat


def assemble(problem: RadialProblem, basis: BasisSpec, kernels: KernelTable | None = None, check: bool = True) -> PencilTriple:
    """Build the pencil for ``problem`` on ``basis``.

    ``kernels`` may be passed to reuse a precomputed table; it must cover
    indices up to ``basis.max_index`` and match the problem's potential.
    """
    size = basis.max_index + 1
    if kernels is None:
        kernels = build_kernel_table(problem.potential, size)
    if kernels.potential != problem.potential:
        raise AssemblyError(f"kernel table is for {kernels.potential.label()}, problem has {problem.potential.label()}")
    if kernels.size < size:
        raise AssemblyError(f"kernel table extent {kernels.size} is below the required {size}")
    lmat, kmat = _blocks(kernels, problem.kappa, basis.n_upper, basis.n_lower)
    if check:
        # a transposed block shows up here, before the rounding residue is removed
        PencilTriple(np.eye(basis.dim), lmat, kmat, basis, problem).check(psd=False)
    lmat = 0.5 * (lmat + lmat.T)
    kmat = 0.5 * (kmat + kmat.T)
    bmat = np.eye(basis.dim)
    for m in (bmat, lmat, kmat):
        m.flags.writeable = False
    triple = PencilTriple(bmat, lmat, kmat, basis, problem)
    if check:
        triple.check()
    return triple


def galerkin_matrix(triple: PencilTriple) -> NDArray[np.float64]:
    """Matrix of the Galerkin eigenproblem; with ``B = I`` this is ``L`` itself."""
    return triple.l_matrix


def galerkin_eigenvalues(triple: PencilTriple) -> NDArray[np.float64]:
    return np.linalg.eigvalsh(galerkin_matrix(triple))


# --------------------------------------------------------------------------
# plain-text pencil exchange


def write_pencil(triple: PencilTriple, path: str | Path) -> None:
    lines = [
        FORMAT_TAG,
        f"dim {triple.dim}",
        f"N {triple.basis.n_upper}",
        f"M {triple.basis.n_lower}",
        f"kappa {triple.problem.kappa}",
        f"potential {triple.problem.potential.label()}",
    ]
    for name, mat in (("B", triple.b_matrix), ("L", triple.l_matrix), ("K", triple.k_matrix)):
        lines.append(name)
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in mat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_pencil(path: str | Path, check: bool = True) -> PencilTriple:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != FORMAT_TAG:
        raise AssemblyError(f"{path}: not a {FORMAT_TAG!r} file")
    header: dict[str, str] = {}
    for line in text[1:6]:
        key, _, val = line.partition(" ")
        header[key] = val.strip()
    try:
        dim, n_up, n_lo = int(header["dim"]), int(header["N"]), int(header["M"])
        problem = RadialProblem(int(header["kappa"]), PotentialSpec.parse(header["potential"]))
    except (KeyError, ValueError) as exc:
        raise AssemblyError(f"{path}: bad header ({exc})") from exc
    basis = BasisSpec(n_up, n_lo)
    if basis.dim != dim:
        raise AssemblyError(f"{path}: dim {dim} does not equal N + M = {basis.dim}")
    mats = {}
    pos = 6
    for name in ("B", "L", "K"):
        if pos >= len(text) or text[pos].strip() != name:
            raise AssemblyError(f"{path}: expected matrix {name} at line {pos + 1}")
        rows = text[pos + 1 : pos + 1 + dim]
        mat = np.array([[float(x) for x in row.split()] for row in rows])
        if mat.shape != (dim, dim):
            raise AssemblyError(f"{path}: matrix {name} has shape {mat.shape}")
        mat.flags.writeable = False
        mats[name] = mat
        pos += 1 + dim
    triple = PencilTriple(mats["B"], mats["L"], mats["K"], basis, problem)
    if check:
        triple.check()
    return triple
