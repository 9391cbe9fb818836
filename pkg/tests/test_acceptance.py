"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
Two criteria are not attainable as stated on this basis; they run as stated
under ``xfail(strict=True)`` and each has a passing supplementary check at
the scale where the reference values are actually reached.
"""

from dataclasses import replace

import numpy as np
import pytest

from dirac_qpm.assembly import PencilTriple, assemble
from dirac_qpm.experiments import (
    ExperimentConfig,
    oracle_checks,
    run_balance,
    run_convergence,
    run_coulomb,
    run_inverse_harmonic_sweep,
    run_subcoulomb_sweep,
    solve,
)
from dirac_qpm.problem import BasisSpec, PotentialSpec, RadialProblem
from dirac_qpm.qep import enclosure, second_order_spectrum
from dirac_qpm.reference import CoulombSpectrum, check_enclosures, coulomb_eigenvalue

from conftest import BENCHMARKS
from pencil_oracle import entrywise_rel, quadrature_pencil

COULOMB = RadialProblem(-1, PotentialSpec.coulomb(-0.5))
SPECTRUM = CoulombSpectrum(-0.5)
CFG = ExperimentConfig()
REFERENCE_RESIDUALS = {15: (0.176115, 0.680599), 25: (0.084527, 0.514205), 35: (0.072552, 0.457034)}
REFERENCE_SWEEP = [
    (0.1, 0.6474, 0.0675),
    (0.2, 0.6932, 0.0599),
    (0.3, 0.7316, 0.0542),
    (0.4, 0.7642, 0.0499),
    (0.5, 0.7918, 0.0468),
    (0.6, 0.8151, 0.0448),
    (0.7, 0.8346, 0.0439),
    (0.8, 0.8505, 0.0449),
    (0.9, 0.8627, 0.0504),
    (1.0, 0.8711, 0.0680),
]

_runs: dict[int, list] = {}


def coulomb_filtered(n):
    """Filtered points of the balanced Coulomb run, cached for criterion 8."""
    if n not in _runs:
        _runs[n] = solve(COULOMB, BasisSpec.balanced(n), CFG).filtered
    return _runs[n]


def sharpest_cover(points, level):
    covering = [p for p in points if enclosure(p).contains(level)]
    return min(covering, key=lambda p: abs(p.imag)) if covering else None


def large_run_report(n):
    pts = coulomb_filtered(n)
    ground = min(pts, key=lambda p: abs(p.value - (0.8661 + 0.0236j)))
    e1, e2 = (sharpest_cover(pts, SPECTRUM.levels[j]) for j in (1, 2))
    r1 = abs(e1.imag) if e1 else np.inf
    r2 = abs(e2.imag) if e2 else np.inf
    ok = abs(ground.value - (0.8661 + 0.0236j)) <= 1e-3 and r1 <= 0.0086 + 1e-3 and r2 <= 0.0041 + 1e-3
    detail = f"N=M={n}: ground {ground.real:.5f}+{ground.imag:.5f}i, E1 radius {r1:.5f}, E2 radius {r2:.5f}"
    return ok, detail


def test_criterion_01_coulomb_levels(acceptance):
    ref = [0.866025, 0.965925, 0.985121, 0.99174012, 0.9947623]
    got = [coulomb_eigenvalue(-0.5, -1, j) for j in range(5)]
    err = max(abs(g - r) for g, r in zip(got, ref))
    assert acceptance("criterion 1", err <= 1e-6, f"max level error {err:.2e} (tol 1e-06)")


def test_criterion_02_kernel_oracle(acceptance):
    worst = {}
    failed = []
    for name, pot in BENCHMARKS.items():
        for c in oracle_checks(pot, 20):
            worst[name] = max(worst.get(name, 0.0), c.max_error / c.tolerance)
            if not c.passed:
                failed.append(f"{name}:{c.kernel}={c.max_error:.2e}")
    detail = "worst error/tolerance " + ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
    assert acceptance("criterion 2", not failed, detail + (f"; failed {failed}" if failed else ""))


def test_criterion_03_pencil_oracle(acceptance):
    errs = {}
    for name, pot in BENCHMARKS.items():
        problem = RadialProblem(-1, pot)
        triple = assemble(problem, BasisSpec(6, 6))
        l_ref, k_ref = quadrature_pencil(problem, BasisSpec(6, 6))
        errs[name] = max(entrywise_rel(triple.l_matrix, l_ref), entrywise_rel(triple.k_matrix, k_ref))
    ok = max(errs.values()) <= 1e-8
    assert acceptance("criterion 3", ok, "max entrywise rel " + ", ".join(f"{k} {v:.1e}" for k, v in sorted(errs.items())) + " (tol 1e-08)")


def test_criterion_04_ground_residuals(tmp_path, acceptance):
    res = run_coulomb(replace(CFG, sizes=(15, 25, 35), out_dir=tmp_path))
    for n in (15, 25, 35):
        coulomb_filtered(n)
    errs, parts = [], []
    for row in res.tables["residuals"]:
        r_ref, b_ref = REFERENCE_RESIDUALS[row["n"]]
        errs += [abs(row["residual"] - r_ref), abs(row["bound"] - b_ref)]
        parts.append(f"n={row['n']} ({row['residual']:.6f}, {row['bound']:.6f})")
    ok = len(parts) == 3 and max(errs) <= 1e-3
    assert acceptance("criterion 4", ok, "; ".join(parts) + f"; max error {max(errs):.1e} (tol 1e-03)")


def test_criterion_05_subcoulomb_sweep(tmp_path, acceptance):
    cfg = replace(CFG, potential="subcoulomb", betas=tuple(b for b, _, _ in REFERENCE_SWEEP), sizes=(15,), out_dir=tmp_path)
    rows = run_subcoulomb_sweep(cfg).tables["sweep"]
    err = max(max(abs(r["E0"] - e), abs(r["im_lambda"] - im)) for r, (_, e, im) in zip(rows, REFERENCE_SWEEP))
    ok = len(rows) == 10 and err <= 1e-3
    assert acceptance("criterion 5", ok, f"ten rows, max error {err:.1e} (tol 1e-03)")


@pytest.mark.xfail(strict=True, reason="reference values belong to N=M=1000; at N=M=500 the ground radius is 0.0268")
def test_criterion_06_large_run_as_stated(acceptance):
    ok, detail = large_run_report(500)
    assert acceptance("criterion 6", ok, detail, expected_failure=True)


def test_criterion_06_supplementary_n1000(acceptance):
    ok, detail = large_run_report(1000)
    assert acceptance("criterion 6s (supplementary)", ok, detail)


def test_criterion_07_inverse_harmonic(tmp_path, acceptance):
    cfg = replace(CFG, potential="invharm", gamma=-4.0, gammas=(-4.0,), dim=120, out_dir=tmp_path)
    reps = run_inverse_harmonic_sweep(cfg).tables["enclosures"]
    parts, ok = [], True
    for ref in (-0.3955, 0.6049, 0.9328):
        r = min(reps, key=lambda row: abs(row["re_lambda"] - ref))
        hit = abs(r["re_lambda"] - ref) <= 1e-2 and r["enclosure_lo"] <= ref <= r["enclosure_hi"]
        ok &= hit
        parts.append(f"{r['re_lambda']:.4f}+-{r['im_lambda']:.4f}")
    assert acceptance("criterion 7", ok, ", ".join(parts))


def test_criterion_08_soundness(acceptance):
    total, bad = 0, 0
    for n in (15, 25, 35, 500, 1000):
        rep = check_enclosures([enclosure(p) for p in coulomb_filtered(n)], SPECTRUM)
        total += len(rep.rows)
        bad += rep.violations
    assert acceptance("criterion 8", bad == 0, f"{total} enclosures over n=15,25,35,500,1000; {bad} violations")


def test_criterion_09_synthetic(acceptance):
    rng = np.random.default_rng(9)
    worst_im, worst_re = 0.0, 0.0
    for _ in range(50):
        n = int(rng.integers(2, 11))
        x = rng.standard_normal((n, n))
        a = 0.5 * (x + x.T)
        t = PencilTriple(np.eye(n), a, a @ a, BasisSpec(1, n - 1), COULOMB)
        vals = np.array([p.value for p in second_order_spectrum(t)])
        worst_im = max(worst_im, float(np.max(np.abs(vals.imag))))
        worst_re = max(worst_re, float(np.max(np.abs(np.sort(vals.real) - np.repeat(np.linalg.eigvalsh(a), 2)))))
    ok = worst_im <= 1e-8 and worst_re <= 1e-8
    assert acceptance("criterion 9", ok, f"50 pencils, max |Im| {worst_im:.1e}, max doubled-spectrum error {worst_re:.1e}")


def convergence_exponent(tmp_path, cfg):
    fits = run_convergence(replace(cfg, out_dir=tmp_path)).tables["fits"]
    return fits[0]["a"]


@pytest.mark.xfail(strict=True, reason="exponent depends on the n range; n=40..400 gives about -0.24")
def test_criterion_10_coulomb_as_stated(tmp_path, acceptance):
    a = convergence_exponent(tmp_path, replace(CFG, n_values=tuple(range(40, 401, 40)), ratios=(0.5,)))
    assert acceptance("criterion 10 (Coulomb)", abs(a + 0.3963) <= 0.1, f"a = {a:.4f}, target -0.3963+-0.1", expected_failure=True)


def test_criterion_10_coulomb_supplementary(tmp_path, acceptance):
    a = convergence_exponent(tmp_path, replace(CFG, n_values=tuple(range(10, 201, 10)), ratios=(0.5,)))
    assert acceptance("criterion 10s (Coulomb, n=10..200)", abs(a + 0.3963) <= 0.1, f"a = {a:.4f}, target -0.3963+-0.1")


def test_criterion_10_inverse_harmonic(tmp_path, acceptance):
    cfg = replace(CFG, potential="invharm", gamma=-2.0, n_values=tuple(range(40, 401, 40)), ratios=(0.5,))
    a = convergence_exponent(tmp_path, cfg)
    assert acceptance("criterion 10 (inverse harmonic)", abs(a + 0.7979) <= 0.15, f"a = {a:.4f}, target -0.7979+-0.15")


def test_criterion_11_balance(tmp_path, acceptance):
    res = run_balance(replace(CFG, dim=200, n_steps=tuple(range(10, 191, 5)), out_dir=tmp_path))
    suspects = sum(r["classification"] == "SPURIOUS-SUSPECT" for r in res.tables["galerkin"] if r["N"] == 150)
    ground = [r for r in res.tables["tracked"] if r["level"] == 0]
    best = min(ground, key=lambda r: r["true_residual"])
    ok = suspects > 0 and best["N"] > 100 and res.violations == 0
    detail = f"{suspects} suspects at (150,50); argmin |Re - E0| at N={best['N']}; {res.violations} violations"
    assert acceptance("criterion 11", ok, detail)
