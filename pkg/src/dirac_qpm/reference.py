"""Exact Coulomb levels, enclosure soundness, Galerkin pollution and rate fits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .problem import COULOMB_GAMMA_LIMIT
from .qep import Enclosure, RadialSpinor

SOUNDNESS_SLACK = 1e-6
POLLUTION_THRESHOLD = 0.02


def coulomb_eigenvalue(gamma: float, kappa: int, j: int) -> float:
    """Bound-state energy ``E_j`` of ``H_kappa`` with potential ``gamma / r``."""
    if j < 0:
        raise ValueError("level index j must be non-negative")
    if kappa == 0:
        raise ValueError("kappa must be non-zero")
    if gamma * gamma >= kappa * kappa:
        raise ValueError(f"need gamma^2 < kappa^2, got gamma={gamma}, kappa={kappa}")
    if kappa > 0 and j == 0:
        raise ValueError("there is no j = 0 level for kappa > 0")
    if gamma == 0.0:
        return 1.0
    nu = j + math.sqrt(kappa * kappa - gamma * gamma)
    return 1.0 / math.sqrt(1.0 + gamma * gamma / (nu * nu))


@dataclass(frozen=True)
class CoulombSpectrum:
    """Levels ``E_0 < E_1 < ...`` plus the essential spectrum outside ``(-1, 1)``.

    ``j_max`` only needs to be large enough that consecutive levels beyond it
    are closer than the soundness slack, so everything above ``E_(j_max)``
    counts as spectrum.
    """

    gamma: float
    kappa: int = -1
    j_max: int = 5000
    levels: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        j0 = 1 if self.kappa > 0 else 0
        levels = np.array([coulomb_eigenvalue(self.gamma, self.kappa, j) for j in range(j0, self.j_max + 1)])
        levels.flags.writeable = False
        object.__setattr__(self, "levels", levels)

    def eigenvalue(self, j: int) -> float:
        return coulomb_eigenvalue(self.gamma, self.kappa, j)

    def gap_distance(self, index: int = 0) -> float:
        """Distance from ``levels[index]`` to the rest of the spectrum."""
        e = self.levels[index]
        below = self.levels[index - 1] if index > 0 else -1.0
        above = self.levels[index + 1] if index + 1 < self.levels.size else 1.0
        return float(min(e - below, above - e))

    def distance(self, x: float) -> float:
        """Distance from ``x`` to the spectrum."""
        if x <= -1.0 or x >= self.levels[-1]:
            return 0.0
        return float(min(np.min(np.abs(self.levels - x)), x + 1.0))

    def intersects(self, lo: float, hi: float, slack: float = SOUNDNESS_SLACK) -> bool:
        lo, hi = lo - slack, hi + slack
        if lo <= -1.0 or hi >= self.levels[-1]:
            return True
        i = np.searchsorted(self.levels, lo)
        return bool(i < self.levels.size and self.levels[i] <= hi)


def coulomb_ground_state(gamma: float, grid: ArrayLike) -> RadialSpinor:
    """Normalised ``kappa = -1`` ground state ``(1, rho) r^s exp(-c r)``.

    ``s = sqrt(1 - gamma^2)``, ``rho = (1 - s) / gamma`` and
    ``c = |gamma| E_0 / s``; the norm follows from ``int r^(2s) e^(-2cr) dr``.
    """
    if not -COULOMB_GAMMA_LIMIT < gamma < 0.0:
        raise ValueError(f"ground state needs -sqrt(3)/2 < gamma < 0, got {gamma}")
    r = np.asarray(grid, dtype=float)
    s = math.sqrt(1.0 - gamma * gamma)
    e0 = coulomb_eigenvalue(gamma, -1, 0)
    c = abs(gamma) * e0 / s
    rho = (1.0 - s) / gamma
    log_norm2 = math.log1p(rho * rho) + math.lgamma(2.0 * s + 1.0) - (2.0 * s + 1.0) * math.log(2.0 * c)
    profile = np.exp(s * np.log(r) - c * r - 0.5 * log_norm2)
    return RadialSpinor(r, profile, rho * profile)


# --------------------------------------------------------------------------
# soundness and pollution


class Classification(str, Enum):
    SOUND = "SOUND"
    VIOLATION = "VIOLATION"
    SPURIOUS_SUSPECT = "SPURIOUS-SUSPECT"
    CONSISTENT = "CONSISTENT"


@dataclass(frozen=True)
class ReportRow:
    value: float
    classification: Classification
    distance: float


@dataclass(frozen=True)
class Report:
    rows: tuple[ReportRow, ...]

    def count(self, cls: Classification) -> int:
        return sum(r.classification is cls for r in self.rows)

    @property
    def violations(self) -> int:
        return self.count(Classification.VIOLATION)

    @property
    def suspects(self) -> list[ReportRow]:
        return [r for r in self.rows if r.classification is Classification.SPURIOUS_SUSPECT]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "classification", "distance"])
            for r in self.rows:
                w.writerow([f"{r.value:.17g}", r.classification.value, f"{r.distance:.17g}"])

    def summary(self) -> str:
        counts = {c.value: self.count(c) for c in Classification if self.count(c)}
        parts = ", ".join(f"{k}: {v}" for k, v in counts.items()) or "empty"
        return f"{len(self.rows)} entries ({parts})"


def check_enclosures(enclosures: Iterable[Enclosure], spectrum: CoulombSpectrum, slack: float = SOUNDNESS_SLACK) -> Report:
    """Every interval must meet the spectrum; ``distance`` is from the center to the spectrum."""
    rows = []
    for e in enclosures:
        ok = spectrum.intersects(e.lower, e.upper, slack)
        cls = Classification.SOUND if ok else Classification.VIOLATION
        rows.append(ReportRow(e.center, cls, spectrum.distance(e.center)))
    return Report(tuple(rows))


def pollution_report(
    galerkin_eigs: ArrayLike,
    enclosures: Sequence[Enclosure],
    spectrum: CoulombSpectrum | None = None,
    threshold: float = POLLUTION_THRESHOLD,
) -> Report:
    """Flag Galerkin gap eigenvalues far from every enclosure center and every known level."""
    eigs = np.asarray(galerkin_eigs, dtype=float)
    gap = np.sort(eigs[(eigs > -1.0) & (eigs < 1.0)])
    centers = np.array([e.center for e in enclosures])
    rows = []
    for x in gap:
        d = float(np.min(np.abs(centers - x))) if centers.size else math.inf
        if spectrum is not None:
            d = min(d, spectrum.distance(x))
        cls = Classification.SPURIOUS_SUSPECT if d > threshold else Classification.CONSISTENT
        rows.append(ReportRow(float(x), cls, d))
    return Report(tuple(rows))


# --------------------------------------------------------------------------
# rate fits


@dataclass(frozen=True)
class ConvergenceFit:
    """``|Im lambda_n| ~ prefactor * n ** exponent`` by least squares in log-log."""

    exponent: float
    prefactor: float
    samples: tuple[tuple[int, float], ...]

    def predict(self, n: ArrayLike) -> NDArray[np.float64]:
        return self.prefactor * np.asarray(n, dtype=float) ** self.exponent


def fit_convergence(samples: Iterable[tuple[float, float]]) -> ConvergenceFit:
    samples = tuple((int(n) if float(n).is_integer() else n, float(v)) for n, v in samples)
    if len(samples) < 3:
        raise ValueError("a rate fit needs at least 3 samples")
    n = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples])
    if np.any(v <= 0.0) or np.any(n <= 0.0):
        raise ValueError("rate fit needs positive n and positive residuals")
    design = np.column_stack([np.log(n), np.ones_like(n)])
    (a, log_b), *_ = np.linalg.lstsq(design, np.log(v), rcond=None)
    return ConvergenceFit(float(a), float(math.exp(log_b)), samples)
