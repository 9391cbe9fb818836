"""Command-line front end: ``dirac-qpm <subcommand> [options]``.

Exit status is 0 on success, 2 when an enclosure misses the known spectrum
(or a kernel disagrees with its quadrature oracle), 1 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .assembly import AssemblyError, assemble, galerkin_eigenvalues, read_pencil, write_pencil
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    cluster_representatives,
    oracle_checks,
    write_rows,
)
from .problem import RadialProblem, Variant
from .qep import enclosure, filter_points, second_order_spectrum, write_points_csv
from .reference import CoulombSpectrum, check_enclosures, pollution_report

log = logging.getLogger("dirac_qpm")

EXIT_OK, EXIT_USAGE, EXIT_UNSOUND = 0, 1, 2

SUBCOMMAND_DEFAULTS: dict[str, dict[str, str]] = {
    "coulomb": {"potential": "coulomb", "gamma": "-0.5"},
    "subcoulomb": {"potential": "subcoulomb", "gamma": "-0.5", "sizes": "15"},
    "invharm": {"potential": "invharm", "gamma": "-4", "dim": "120"},
    "balance": {"potential": "coulomb", "gamma": "-0.5", "dim": "200"},
    "convergence": {"potential": "coulomb", "gamma": "-0.5"},
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem and basis")
    g.add_argument("--potential", choices=["free", "coulomb", "subcoulomb", "invharm"])
    g.add_argument("--gamma", help="coupling constant")
    g.add_argument("--beta", help="sub-Coulomb exponent")
    g.add_argument("--kappa", help="angular quantum number (non-zero integer)")
    g.add_argument("--nupper", dest="n_upper", help="upper-component basis size N")
    g.add_argument("--nlower", dest="n_lower", help="lower-component basis size M")
    g.add_argument("--dim", help="total basis size N + M")
    g = p.add_argument_group("filtering and output")
    g.add_argument("--window", help="real window lo,hi for reported points")
    g.add_argument("--max-imag", dest="max_imag", help="largest |Im lambda| reported")
    g.add_argument("--out", dest="out_dir", help="output directory")
    g.add_argument("--config", type=Path, help="key=value configuration file")
    g.add_argument("--jobs", help="worker threads for sweeps")
    g.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override any configuration key")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac-qpm", description="Second-order spectral enclosures for radial Dirac operators.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    sub.add_parser("assemble", parents=[common], help="write the pencil B, L, K to a text file")
    s = sub.add_parser("solve", parents=[common], help="second-order spectrum of an assembled or stored pencil")
    s.add_argument("--pencil", type=Path, help="read a stored pencil instead of assembling")
    sub.add_parser("galerkin", parents=[common], help="Galerkin eigenvalues with a pollution report")

    s = sub.add_parser("coulomb", parents=[common], help="balanced Coulomb runs with ground-state residuals")
    s.add_argument("--sizes", help="list of N = M values, e.g. 15,25,35")
    s = sub.add_parser("subcoulomb", parents=[common], help="ground level versus beta")
    s.add_argument("--betas", help="list or lo:step:hi range of exponents")
    s.add_argument("--sizes", help="balanced size N = M")
    s = sub.add_parser("invharm", parents=[common], help="inverse-harmonic sweep over gamma")
    s.add_argument("--gammas", help="list or lo:step:hi range of couplings")
    s = sub.add_parser("balance", parents=[common], help="fixed dimension, varying N")
    s.add_argument("--steps", dest="n_steps", help="values of N, e.g. 10:5:190")
    s = sub.add_parser("convergence", parents=[common], help="|Im lambda| versus n with a power-law fit")
    s.add_argument("--n-values", dest="n_values", help="total sizes n, e.g. 40:40:400")
    s.add_argument("--ratios", help="N/n ratios, e.g. 1/8,1/2")

    s = sub.add_parser("oracle-check", parents=[common], help="compare kernel tables with adaptive quadrature")
    s.add_argument("--max-index", type=int, default=20)
    return parser


_FLAG_KEYS = ("potential", "gamma", "beta", "kappa", "n_upper", "n_lower", "dim", "window", "max_imag", "out_dir", "jobs", "sizes", "betas", "gammas", "n_steps", "n_values", "ratios")


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, str] = {"experiment": args.command}
    values.update(SUBCOMMAND_DEFAULTS.get(args.command, {}))
    cfg = ExperimentConfig.from_mapping(values)
    if args.config is not None:
        cfg = ExperimentConfig.from_file(args.config, cfg)
    flags = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    for item in args.overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        flags[key] = val
    return ExperimentConfig.from_mapping(flags, cfg)


def _problem(cfg: ExperimentConfig) -> RadialProblem:
    try:
        return RadialProblem(cfg.kappa, cfg.make_potential())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spectrum(problem: RadialProblem) -> CoulombSpectrum | None:
    pot = problem.potential
    if pot.variant is Variant.COULOMB and not pot.is_free:
        return CoulombSpectrum(pot.gamma, problem.kappa)
    return None


def cmd_assemble(cfg: ExperimentConfig) -> int:
    triple = assemble(_problem(cfg), cfg.basis())
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "pencil.txt"
    write_pencil(triple, path)
    print(f"wrote {path} (dim {triple.dim}, {triple.problem.potential.label()}, kappa {triple.problem.kappa})")
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig, pencil: Path | None) -> int:
    triple = read_pencil(pencil) if pencil is not None else assemble(_problem(cfg), cfg.basis())
    points = second_order_spectrum(triple)
    kept = filter_points(points, cfg.window, cfg.max_imag)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_points_csv(points, cfg.out_dir / "spectrum_all.csv")
    write_points_csv(kept, cfg.out_dir / "spectrum_filtered.csv")
    print(f"{len(points)} points, {len(kept)} in window {cfg.window} with |Im| <= {cfg.max_imag}")
    for p in cluster_representatives(kept, cfg.cluster_factor):
        e = enclosure(p)
        print(f"  {p.real:.10f} {p.imag:+.10f}i   [{e.lower:.10f}, {e.upper:.10f}]")
    spectrum = _spectrum(triple.problem)
    if spectrum is not None:
        report = check_enclosures([enclosure(p) for p in kept], spectrum)
        report.write_csv(cfg.out_dir / "soundness.csv")
        print(f"soundness: {report.summary()}")
        if report.violations:
            return EXIT_UNSOUND
    return EXIT_OK


def cmd_galerkin(cfg: ExperimentConfig) -> int:
    triple = assemble(_problem(cfg), cfg.basis())
    eigs = galerkin_eigenvalues(triple)
    kept = filter_points(second_order_spectrum(triple), cfg.window, cfg.max_imag)
    encl = [enclosure(p) for p in cluster_representatives(kept, cfg.cluster_factor)]
    report = pollution_report(eigs, encl, _spectrum(triple.problem), cfg.threshold)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(cfg.out_dir / "galerkin.csv")
    print(f"Galerkin gap eigenvalues: {report.summary()}")
    for r in report.suspects:
        print(f"  suspect {r.value:.10f} (distance {r.distance:.3e})")
    return EXIT_OK


def cmd_oracle(cfg: ExperimentConfig, max_index: int) -> int:
    pot = cfg.make_potential()
    checks = oracle_checks(pot, max_index)
    rows = [{"kernel": c.kernel, "max_error": c.max_error, "tolerance": c.tolerance, "passed": c.passed} for c in checks]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(cfg.out_dir / "oracle_check.csv", ["kernel", "max_error", "tolerance", "passed"], rows)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.kernel:<16} error {c.max_error:.3e} (tol {c.tolerance:.0e})")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_UNSOUND


def cmd_experiment(cfg: ExperimentConfig) -> int:
    result = EXPERIMENTS[cfg.experiment](cfg)
    for name, rows in result.tables.items():
        print(f"{name}: {len(rows)} rows")
        if name in ("residuals", "sweep", "fits"):
            for row in rows:
                print("  " + "  ".join(f"{k}={_short(v)}" for k, v in row.items()))
    print(f"wrote {len(result.files)} files to {cfg.out_dir}")
    if result.violations:
        print(f"enclosure soundness violations: {result.violations}", file=sys.stderr)
        return EXIT_UNSOUND
    return EXIT_OK


def _short(v: object) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        if args.command == "assemble":
            return cmd_assemble(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, args.pencil)
        if args.command == "galerkin":
            return cmd_galerkin(cfg)
        if args.command == "oracle-check":
            return cmd_oracle(cfg, args.max_index)
        return cmd_experiment(replace(cfg, experiment=args.command))
    except (ConfigError, AssemblyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
