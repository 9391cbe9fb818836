"""Experiment drivers behind the command-line interface.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its CSV
artifacts into ``config.out_dir`` and returns an :class:`ExperimentResult`
holding the same rows in memory.  Independent solves of a sweep are farmed
out to a thread pool; results are always consumed in sweep order, so the
output does not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TypeVar

import numpy as np

from .assembly import PencilTriple, assemble, galerkin_eigenvalues
from .kernels import KernelTable, build_kernel_table
from .problem import BasisSpec, PotentialSpec, RadialProblem, Variant
from .qep import (
    Enclosure,
    RadialSpinor,
    SecondOrderPoint,
    eigenfunction,
    enclosure,
    filter_points,
    second_order_spectrum,
    subspace_residual,
    write_points_csv,
    write_spinor_csv,
)
from .reference import (
    CoulombSpectrum,
    Report,
    check_enclosures,
    coulomb_ground_state,
    fit_convergence,
    pollution_report,
)

T = TypeVar("T")
R = TypeVar("R")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


def parse_range(text: str) -> list[float]:
    """``"10:5:190"`` (inclusive) or ``"15,25,35"``; entries may be fractions like ``3/8``."""
    text = text.strip()
    if not text:
        return []
    if ":" in text and "," not in text:
        parts = [float(Fraction(p)) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1.0
        elif len(parts) == 3:
            lo, step, hi = parts
        else:
            raise ConfigError(f"bad range {text!r}")
        if step == 0 or (hi - lo) * step < 0:
            raise ConfigError(f"range {text!r} is empty or does not terminate")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(count)]
    return [float(Fraction(p.strip())) for p in text.split(",") if p.strip()]


def _ints(values: Iterable[float]) -> list[int]:
    out = []
    for v in values:
        if v != int(v):
            raise ConfigError(f"expected an integer, got {v}")
        out.append(int(v))
    return out


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; list-valued fields hold sweep values."""

    experiment: str = "coulomb"
    potential: str = "coulomb"
    gamma: float = -0.5
    beta: float = 0.5
    kappa: int = -1
    n_upper: int | None = None
    n_lower: int | None = None
    dim: int | None = None
    sizes: tuple[int, ...] = (15, 25, 35)
    betas: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    gammas: tuple[float, ...] = tuple(-5.0 + 0.5 * i for i in range(11))
    n_values: tuple[int, ...] = tuple(range(40, 401, 40))
    ratios: tuple[float, ...] = (0.5,)
    n_steps: tuple[int, ...] = tuple(range(10, 191, 5))
    levels: int = 3
    window: tuple[float, float] = (-1.0, 1.0)
    max_imag: float = 0.1
    cluster_factor: float = 10.0
    threshold: float = 0.02
    grid_min: float = 1e-8
    grid_max: float = 60.0
    grid_points: int = 20000
    spinor_gamma: float = -4.0
    out_dir: Path = Path("out")
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.window[0] >= self.window[1]:
            raise ConfigError("window must satisfy lo < hi")
        if not self.max_imag > 0.0:
            raise ConfigError("max_imag must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.cluster_factor <= 0.0:
            raise ConfigError("cluster_factor must be positive")
        if not 0.0 < self.grid_min < self.grid_max or self.grid_points < 10:
            raise ConfigError("bad spinor grid")
        for name in ("sizes", "n_values", "n_steps"):
            vals = getattr(self, name)
            if not vals or min(vals) < 1:
                raise ConfigError(f"{name} must be a nonempty list of positive integers")
        if not self.betas or not self.gammas or not self.ratios:
            raise ConfigError("sweep lists must be nonempty")
        if any(not 0.0 < r < 1.0 for r in self.ratios):
            raise ConfigError("ratios must lie in (0, 1)")
        try:
            self.make_potential()
            if self.potential == "subcoulomb":
                for b in self.betas:
                    PotentialSpec.subcoulomb(self.gamma, b)
            if self.potential == "invharm":
                for g in self.gammas:
                    PotentialSpec.inverse_harmonic(g)
            RadialProblem(self.kappa, PotentialSpec.free())
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def make_potential(self, gamma: float | None = None, beta: float | None = None) -> PotentialSpec:
        g = self.gamma if gamma is None else gamma
        b = self.beta if beta is None else beta
        kind = self.potential
        if kind == "free" or g == 0.0:
            return PotentialSpec.free()
        if kind == "coulomb":
            return PotentialSpec.coulomb(g)
        if kind == "subcoulomb":
            return PotentialSpec.subcoulomb(g, b)
        if kind == "invharm":
            return PotentialSpec.inverse_harmonic(g)
        raise ConfigError(f"unknown potential {kind!r}")

    def basis(self) -> BasisSpec:
        """Basis from ``n_upper``/``n_lower``, or ``dim`` split evenly, or the first ``sizes`` entry."""
        up, lo = self.n_upper, self.n_lower
        if up is None and lo is None:
            if self.dim is not None:
                up = round_half_up(self.dim / 2)
                lo = self.dim - up
            else:
                up = lo = self.sizes[0]
        elif up is None or lo is None:
            if self.dim is None:
                up = lo = up if up is not None else lo
            elif up is None:
                up = self.dim - lo
            else:
                lo = self.dim - up
        try:
            return BasisSpec(int(up), int(lo))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> np.ndarray:
        inner = np.geomspace(self.grid_min, 1.0, self.grid_points // 4, endpoint=False)
        outer = np.linspace(1.0, self.grid_max, self.grid_points - inner.size)
        return np.concatenate([inner, outer])

    # -- key=value plumbing --

    @classmethod
    def from_mapping(cls, values: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
        base = base or cls()
        known = {f.name: f for f in fields(cls)}
        updates: dict[str, Any] = {}
        for raw_key, raw in values.items():
            key = raw_key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {raw_key!r}")
            updates[key] = _coerce(key, str(raw).strip())
        try:
            return replace(base, **updates)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
        values = {}
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            values[key.strip()] = val.strip()
        return cls.from_mapping(values, base)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


_INT_LISTS = {"sizes", "n_values", "n_steps"}
_FLOAT_LISTS = {"betas", "gammas", "ratios"}
_INTS = {"kappa", "n_upper", "n_lower", "dim", "levels", "grid_points", "jobs"}
_FLOATS = {"gamma", "beta", "max_imag", "cluster_factor", "threshold", "grid_min", "grid_max", "spinor_gamma"}


def _coerce(key: str, raw: str) -> Any:
    try:
        if key in _INT_LISTS:
            return tuple(_ints(parse_range(raw)))
        if key in _FLOAT_LISTS:
            return tuple(parse_range(raw))
        if key in _INTS:
            return None if raw in ("", "none", "None") else int(raw)
        if key in _FLOATS:
            return float(Fraction(raw))
        if key == "window":
            lo, hi = (float(x) for x in raw.split(","))
            return (lo, hi)
        if key == "out_dir":
            return Path(raw)
        return raw
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


# --------------------------------------------------------------------------
# shared machinery


@dataclass
class ExperimentResult:
    name: str
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    violations: int = 0

    def add_rows(self, table: str, rows: list[dict[str, Any]]) -> None:
        self.tables.setdefault(table, []).extend(rows)


def _start(name: str, cfg: ExperimentConfig) -> ExperimentResult:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return ExperimentResult(name)


def parallel_map(func: Callable[[T], R], items: Sequence[T], jobs: int) -> list[R]:
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return "" if v is None else str(v)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[dict[str, Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(h)) for h in header])
    return path


@dataclass(frozen=True)
class Solve:
    triple: PencilTriple
    points: list[SecondOrderPoint]
    filtered: list[SecondOrderPoint]


def solve(problem: RadialProblem, basis: BasisSpec, cfg: ExperimentConfig, kernels: KernelTable | None = None) -> Solve:
    triple = assemble(problem, basis, kernels)
    points = second_order_spectrum(triple)
    return Solve(triple, points, filter_points(points, cfg.window, cfg.max_imag))


def cluster_representatives(points: Sequence[SecondOrderPoint], factor: float = 10.0) -> list[SecondOrderPoint]:
    """Sharpest point of each cluster.

    A point joins the cluster of a sharper point when it lies within
    ``factor * |Im|`` of it *and* its own enclosure contains that center;
    a point whose interval excludes the center witnesses a different level.
    """
    left = sorted(points, key=lambda p: (abs(p.imag), p.real))
    reps = []
    while left:
        best = left[0]
        radius = factor * abs(best.imag)
        reps.append(best)
        left = [p for p in left[1:] if abs(p.real - best.real) > min(radius, abs(p.imag))]
    return sorted(reps, key=lambda p: p.real)


def nearest(reps: Sequence[SecondOrderPoint], target: float) -> SecondOrderPoint | None:
    if not reps:
        return None
    return min(reps, key=lambda p: (abs(p.real - target), abs(p.imag)))


def track(reps_per_step: Sequence[Sequence[SecondOrderPoint]], seed: float) -> list[SecondOrderPoint | None]:
    """Nearest-center continuation through a sweep, starting from ``seed``."""
    out: list[SecondOrderPoint | None] = []
    target = seed
    for reps in reps_per_step:
        p = nearest(reps, target)
        out.append(p)
        if p is not None:
            target = p.real
    return out


def _coulomb_spectrum(problem: RadialProblem) -> CoulombSpectrum | None:
    pot = problem.potential
    if pot.variant is Variant.COULOMB and not pot.is_free:
        return CoulombSpectrum(pot.gamma, problem.kappa)
    return None


def _audit(result: ExperimentResult, enclosures: Sequence[Enclosure], spectrum: CoulombSpectrum | None) -> Report | None:
    if spectrum is None:
        return None
    report = check_enclosures(enclosures, spectrum)
    result.violations += report.violations
    return report


def _point_row(p: SecondOrderPoint) -> dict[str, Any]:
    e = enclosure(p)
    return {"re_lambda": p.real, "im_lambda": p.imag, "enclosure_lo": e.lower, "enclosure_hi": e.upper}


POINT_COLUMNS = ["re_lambda", "im_lambda", "enclosure_lo", "enclosure_hi"]


# --------------------------------------------------------------------------
# experiments


def run_coulomb(cfg: ExperimentConfig) -> ExperimentResult:
    """Balanced Coulomb runs for each ``n`` in ``cfg.sizes`` with ground-state residuals."""
    result = _start("coulomb", cfg)
    pot = cfg.make_potential()
    if pot.variant not in (Variant.COULOMB, Variant.FREE):
        raise ConfigError("the coulomb experiment needs potential=coulomb")
    problem = RadialProblem(cfg.kappa, pot)
    spectrum = _coulomb_spectrum(problem)
    out = cfg.out_dir
    grid = cfg.grid()
    kernels = build_kernel_table(pot, max(cfg.sizes))

    def job(n: int) -> Solve:
        return solve(problem, BasisSpec.balanced(n), cfg, kernels)

    table = []
    for n, run in zip(cfg.sizes, parallel_map(job, list(cfg.sizes), cfg.jobs)):
        result.files.append(out / f"points_n{n}.csv")
        write_points_csv(run.filtered, result.files[-1])
        result.add_rows("points", [{"n": n, **_point_row(p)} for p in run.filtered])
        encl = [enclosure(p) for p in run.filtered]
        report = _audit(result, encl, spectrum)
        if report is not None:
            result.files.append(out / f"enclosures_n{n}.csv")
            report.write_csv(result.files[-1])
        if spectrum is None or problem.kappa != -1:
            continue
        reps = cluster_representatives(run.filtered, cfg.cluster_factor)
        ground = nearest(reps, spectrum.levels[0])
        if ground is None:
            continue
        basis = BasisSpec.balanced(n)
        approx = eigenfunction(ground, basis, grid)
        exact = coulomb_ground_state(pot.gamma, grid)
        residual = subspace_residual(approx, [exact])
        bound = abs(ground.imag) / spectrum.gap_distance(0)
        table.append({"n": n, "re_lambda": ground.real, "im_lambda": abs(ground.imag), "residual": residual, "bound": bound})
        result.files.append(out / f"ground_spinor_n{n}.csv")
        write_spinor_csv(_align(approx, exact), result.files[-1])
    if table:
        result.files.append(out / "ground_spinor_exact.csv")
        write_spinor_csv(coulomb_ground_state(pot.gamma, grid), result.files[-1])
    result.add_rows("residuals", table)
    result.files.append(write_rows(out / "table_residuals.csv", ["n", "residual", "bound"], table))
    return result


def _align(approx: RadialSpinor, exact: RadialSpinor) -> RadialSpinor:
    """Flip the overall sign of ``approx`` so it overlaps ``exact`` positively."""
    overlap = np.trapezoid(np.real(approx.upper) * exact.upper + np.real(approx.lower) * exact.lower, approx.grid)
    s = -1.0 if overlap < 0 else 1.0
    return RadialSpinor(approx.grid, s * approx.upper, s * approx.lower, approx.coeffs)


def run_subcoulomb_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Ground level versus ``beta`` at fixed balanced size ``cfg.sizes[0]``."""
    result = _start("subcoulomb", cfg)
    n = cfg.sizes[0] if cfg.n_upper is None else cfg.n_upper
    basis = cfg.basis() if cfg.n_upper is not None or cfg.dim is not None else BasisSpec.balanced(n)

    def job(beta: float) -> Solve:
        problem = RadialProblem(cfg.kappa, PotentialSpec.subcoulomb(cfg.gamma, beta))
        return solve(problem, basis, cfg)

    runs = parallel_map(job, list(cfg.betas), cfg.jobs)
    reps = [cluster_representatives(r.filtered, cfg.cluster_factor) for r in runs]
    seed = reps[0][0].real if reps and reps[0] else 0.0
    rows = []
    for beta, p in zip(cfg.betas, track(reps, seed)):
        if p is None:
            rows.append({"beta": beta, "E0": None, "im_lambda": None})
        else:
            rows.append({"beta": beta, "E0": p.real, "im_lambda": abs(p.imag)})
    result.add_rows("sweep", rows)
    result.files.append(write_rows(cfg.out_dir / "subcoulomb_sweep.csv", ["beta", "E0", "im_lambda"], rows))
    return result


def run_inverse_harmonic_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Gap enclosures and Galerkin eigenvalues for each coupling in ``cfg.gammas``."""
    result = _start("invharm", cfg)
    basis = cfg.basis() if (cfg.n_upper, cfg.n_lower, cfg.dim) != (None, None, None) else BasisSpec.balanced(60)
    grid = cfg.grid()

    def job(g: float) -> Solve:
        pot = PotentialSpec.inverse_harmonic(g) if g != 0.0 else PotentialSpec.free()
        return solve(RadialProblem(cfg.kappa, pot), basis, cfg)

    gammas = list(cfg.gammas)
    encl_rows, gal_rows = [], []
    for g, run in zip(gammas, parallel_map(job, gammas, cfg.jobs)):
        reps = cluster_representatives(run.filtered, cfg.cluster_factor)
        encl_rows += [{"gamma": g, **_point_row(p)} for p in reps]
        eigs = galerkin_eigenvalues(run.triple)
        gal_rows += [{"gamma": g, "value": x} for x in eigs[(eigs > -1.0) & (eigs < 1.0)]]
        if g == cfg.spinor_gamma:
            for i, p in enumerate(reps[:3]):
                result.files.append(cfg.out_dir / f"invharm_spinor_E{i}.csv")
                write_spinor_csv(eigenfunction(p, basis, grid), result.files[-1])
    result.add_rows("enclosures", encl_rows)
    result.add_rows("galerkin", gal_rows)
    result.files.append(write_rows(cfg.out_dir / "invharm_enclosures.csv", ["gamma", *POINT_COLUMNS], encl_rows))
    result.files.append(write_rows(cfg.out_dir / "invharm_galerkin.csv", ["gamma", "value"], gal_rows))
    return result


def run_balance(cfg: ExperimentConfig) -> ExperimentResult:
    """Fixed total dimension, varying split ``N`` in ``cfg.n_steps``."""
    result = _start("balance", cfg)
    dim = cfg.dim or 200
    steps = [n for n in cfg.n_steps if 0 < n < dim]
    if not steps:
        raise ConfigError(f"no admissible N below dim={dim}")
    pot = cfg.make_potential()
    problem = RadialProblem(cfg.kappa, pot)
    spectrum = _coulomb_spectrum(problem)
    kernels = build_kernel_table(pot, max(max(n, dim - n) for n in steps))

    def job(n_up: int) -> Solve:
        return solve(problem, BasisSpec(n_up, dim - n_up), cfg, kernels)

    runs = parallel_map(job, steps, cfg.jobs)
    reps = [cluster_representatives(r.filtered, cfg.cluster_factor) for r in runs]

    # seeds: exact levels, else the representatives of the most balanced split
    if spectrum is not None:
        seeds = list(spectrum.levels[: cfg.levels])
        tracked = [track(reps, s) for s in seeds]
    else:
        mid = min(range(len(steps)), key=lambda i: abs(2 * steps[i] - dim))
        seeds = [p.real for p in reps[mid][: cfg.levels]]
        tracked = []
        for s in seeds:
            up = track(reps[mid:], s)
            down = track(reps[: mid + 1][::-1], s)[::-1]
            tracked.append(down[:-1] + up)

    gal_rows, track_rows = [], []
    for i, (n_up, run) in enumerate(zip(steps, runs)):
        encl = [enclosure(p) for p in reps[i]]
        _audit(result, [enclosure(p) for p in run.filtered], spectrum)
        report = pollution_report(galerkin_eigenvalues(run.triple), encl, spectrum, cfg.threshold)
        gal_rows += [{"N": n_up, "M": dim - n_up, "value": r.value, "classification": r.classification.value, "distance": r.distance} for r in report.rows]
        for level, path in enumerate(tracked):
            p = path[i]
            if p is None:
                continue
            true = abs(p.real - spectrum.levels[level]) if spectrum is not None else None
            track_rows.append({"N": n_up, "M": dim - n_up, "level": level, "re_lambda": p.real, "im_lambda": abs(p.imag), "true_residual": true})
    result.add_rows("galerkin", gal_rows)
    result.add_rows("tracked", track_rows)
    result.files.append(write_rows(cfg.out_dir / "balance_galerkin.csv", ["N", "M", "value", "classification", "distance"], gal_rows))
    result.files.append(write_rows(cfg.out_dir / "balance_tracked.csv", ["N", "M", "level", "re_lambda", "im_lambda", "true_residual"], track_rows))
    return result


def ratio_label(r: float) -> str:
    f = Fraction(r).limit_denominator(64)
    num = "" if f.numerator == 1 else str(f.numerator)
    return f"{num}n/{f.denominator}"


def run_convergence(cfg: ExperimentConfig) -> ExperimentResult:
    """Ground-level ``|Im lambda_n|`` versus total size ``n`` for each split ratio."""
    result = _start("convergence", cfg)
    pot = cfg.make_potential()
    problem = RadialProblem(cfg.kappa, pot)
    spectrum = _coulomb_spectrum(problem)
    ns = sorted(cfg.n_values)
    splits = []
    for r in cfg.ratios:
        for n in ns:
            n_up = round_half_up(n * r)
            if not 0 < n_up < n:
                raise ConfigError(f"ratio {r} leaves an empty component at n={n}")
            splits.append((r, n, n_up))
    kernels = build_kernel_table(pot, max(max(n_up, n - n_up) for _, n, n_up in splits))

    def job(item: tuple[float, int, int]) -> Solve:
        _, n, n_up = item
        return solve(problem, BasisSpec(n_up, n - n_up), cfg, kernels)

    runs = parallel_map(job, splits, cfg.jobs)
    sample_rows, fit_rows = [], []
    for r in cfg.ratios:
        idx = [i for i, s in enumerate(splits) if s[0] == r]
        reps = [cluster_representatives(runs[i].filtered, cfg.cluster_factor) for i in idx]
        seed = spectrum.levels[0] if spectrum is not None else (reps[-1][0].real if reps[-1] else 0.0)
        # continue from the largest n, where the ground level is sharpest
        path = track(reps[::-1], seed)[::-1]
        samples = []
        for i, p in zip(idx, path):
            _, n, n_up = splits[i]
            if p is None or p.imag == 0.0:
                continue
            samples.append((n, abs(p.imag)))
            sample_rows.append({"N": ratio_label(r), "n": n, "n_upper": n_up, "n_lower": n - n_up, "re_lambda": p.real, "im_lambda": abs(p.imag)})
        if len(samples) >= 3:
            fit = fit_convergence(samples)
            fit_rows.append({"N": ratio_label(r), "a": fit.exponent, "b": fit.prefactor})
    result.add_rows("samples", sample_rows)
    result.add_rows("fits", fit_rows)
    result.files.append(write_rows(cfg.out_dir / "convergence_samples.csv", ["N", "n", "n_upper", "n_lower", "re_lambda", "im_lambda"], sample_rows))
    result.files.append(write_rows(cfg.out_dir / "convergence_fit.csv", ["N", "a", "b"], fit_rows))
    return result


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "coulomb": run_coulomb,
    "subcoulomb": run_subcoulomb_sweep,
    "invharm": run_inverse_harmonic_sweep,
    "balance": run_balance,
    "convergence": run_convergence,
}


# --------------------------------------------------------------------------
# kernel audit


@dataclass(frozen=True)
class OracleCheck:
    kernel: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _scaled_error(value: np.ndarray, oracle: np.ndarray) -> float:
    return float(np.max(np.abs(value - oracle) / np.maximum(1.0, np.abs(oracle))))


def oracle_checks(potential: PotentialSpec, max_index: int = 20, rel_tol: float = 1e-12) -> list[OracleCheck]:
    """Compare every kernel table a pencil for ``potential`` uses against adaptive quadrature."""
    from . import kernels as kn
    from .quadrature import oracle_table

    size = max_index + 1
    checks = []
    exact_tol, recursive_tol = 1e-10, 1e-8
    for i, tab in enumerate(kn.t_tables(size), start=1):
        checks.append(OracleCheck(f"t{i}", _scaled_error(tab, oracle_table(f"t{i}", size, size, rel_tol=rel_tol)), exact_tol))
    if potential.variant is Variant.SUBCOULOMB and not potential.is_free:
        b = potential.beta
        for alpha in (b, 2 * b, b + 1):
            checks.append(OracleCheck(f"e2(alpha={alpha:g})", _scaled_error(kn.e2_table(alpha, size), oracle_table("e2", size, size, alpha=alpha, rel_tol=rel_tol)), exact_tol))
        checks.append(OracleCheck(f"e1(beta={b:g})", _scaled_error(kn.e1_table(b, size), oracle_table("e1", size, size, alpha=b, rel_tol=rel_tol)), exact_tol))
    tol_f = exact_tol
    if potential.variant is Variant.INVERSE_HARMONIC and not potential.is_free:
        tol_f = recursive_tol
        raw = 2 * size + 1
        etab = kn.e34_tables(raw - 1, raw - 1, method="recursion")
        checks.append(OracleCheck("i", _scaled_error(kn.overlap_table(raw), oracle_table("i", raw, raw, rel_tol=rel_tol)), exact_tol))
        checks.append(OracleCheck("e3", _scaled_error(etab.e3, oracle_table("e3", raw, raw, rel_tol=rel_tol)), recursive_tol))
        checks.append(OracleCheck("e4", _scaled_error(etab.e4, oracle_table("e4", raw, raw, rel_tol=rel_tol)), recursive_tol))
    if not potential.is_free:
        table = build_kernel_table(potential, size)
        for i, tab in enumerate(table.f, start=1):
            oracle = oracle_table(f"f{i}", size, size, potential=potential, rel_tol=rel_tol)
            checks.append(OracleCheck(f"f{i}", _scaled_error(tab, oracle), tol_f))
    return checks
