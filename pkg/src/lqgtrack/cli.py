"""Command-line driver: ``lqgtrack {solve,simulate,compare} --config PATH``.

Exit codes: 0 success, 2 invalid configuration, 1 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, resolve_config_path
from .exceptions import ConfigError, CoverageError, InsufficientData, NotPositiveDefinite, NotSymmetric
from .metrics import allocation_report, hedging_error, paired_comparison
from .riccati import DEFAULT_STEP, RiccatiSolution, solve_riccati
from .simulate import simulate_paths
from .strategy import ConstantMixPolicy, FeedbackStrategy

log = logging.getLogger("lqgtrack")

VALIDATION_ERRORS = (ConfigError, NotSymmetric, NotPositiveDefinite, CoverageError, InsufficientData)


def _solve(cfg: RunConfig) -> RiccatiSolution:
    return solve_riccati(cfg.market, cfg.liability, cfg.objective, cfg.solver.padding_horizon,
                         cfg.solver.step, cfg.solver.terminal)


def stationarity_lines(sol: RiccatiSolution) -> list:
    T = sol.T
    lines = [f"solver horizon {sol.T_solve:g}, objective horizon {T:g}, terminal={sol.terminal}",
             f"max relative variation on [0, {T:g}]:"]
    variation = sol.relative_variation(0.0, T)
    for name, v in variation.items():
        lines.append(f"  {name:<12s} {v:.6e}")
    lines.append(f"  {'max':<12s} {max(variation.values()):.6e}")
    F00, F0, G0 = sol.evaluate(0.0)
    lines.append(f"t=0: F00={F00:.6g} F0_tilde={np.array2string(F0, precision=6)} G0={G0:.6g}")
    return lines


def _write_manifest(out: Path, command: str, cfg: RunConfig, config_path, extra=None) -> None:
    manifest = {
        "command": command,
        "config_path": str(resolve_config_path(config_path)),
        "config": cfg.raw,
        "seed": cfg.sim.seed,
        "paths": cfg.sim.n_paths,
        "dt": cfg.sim.dt,
        "x0": cfg.x0,
        "x0_rule": cfg.x0_rule,
        "solver": {"step": cfg.solver.step, "padding_horizon": cfg.solver.padding_horizon,
                   "terminal": cfg.solver.terminal},
        "versions": {"lqgtrack": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "defaults": {"step": DEFAULT_STEP, "terminal": "consistent", "x0": "match-benchmark"},
    }
    manifest.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_solve(cfg: RunConfig, config_path="?") -> RiccatiSolution:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    sol = _solve(cfg)
    sol.to_csv(out / "riccati.csv")
    lines = stationarity_lines(sol)
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "solve", cfg, config_path)
    for line in lines:
        print(line)
    return sol


def run_simulate(cfg: RunConfig, config_path="?"):
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    sol = _solve(cfg)
    sol.to_csv(out / "riccati.csv")
    strategy = FeedbackStrategy(cfg.market, cfg.liability, cfg.objective, sol)
    paths = simulate_paths(cfg.market, cfg.liability, cfg.objective, strategy, cfg.sim, cfg.x0)
    report = hedging_error(paths, cfg.objective, cfg.liability, keep_paths=False)
    paths.to_csv(out / "paths.csv")
    report.to_csv(out / "hedge_report.csv")
    allocation_report(paths, cfg.asset_names).to_csv(out / "allocations.csv")
    lines = stationarity_lines(sol) + [
        f"seed {cfg.sim.seed}, paths {cfg.sim.n_paths}, dt {cfg.sim.dt:g}, x0 {cfg.x0:g}",
        f"E_bar at T: {report.E_bar[-1]:.6g}",
        f"max E_bar: {report.E_bar.max():.6g}",
        f"time-averaged relative error: {report.time_averaged_relative_error():.6%}",
        f"max relative error: {report.relative_error.max():.6%}",
        f"J estimate: {report.J:.6g} +/- {report.J_stderr:.3g}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "simulate", cfg, config_path)
    for line in lines:
        print(line)
    return paths, report


def parse_alternative(spec: str, n: int):
    """Preset name (cash, bond, equal) or a JSON list of wealth fractions."""
    if spec == "cash":
        return "cash", np.zeros(n)
    if spec == "bond":
        w = np.zeros(n)
        w[0] = 1.0
        return "bond", w
    if spec == "equal":
        return "equal", np.full(n, 1.0 / n)
    try:
        w = np.asarray(json.loads(spec), dtype=float).reshape(-1)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"--alternative {spec!r}: expected cash, bond, equal or a JSON list") from exc
    if w.size != n:
        raise ConfigError(f"--alternative needs {n} weights, got {w.size}")
    return spec, w


def run_compare(cfg: RunConfig, alternatives, config_path="?") -> list:
    """Optimal strategy against constant-mix alternatives under common random numbers."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    sol = _solve(cfg)
    strategy = FeedbackStrategy(cfg.market, cfg.liability, cfg.objective, sol)
    base = simulate_paths(cfg.market, cfg.liability, cfg.objective, strategy, cfg.sim, cfg.x0)
    rows = []
    for spec in alternatives:
        if spec == "optimal":
            label, alt = "optimal", base
        else:
            label, w = parse_alternative(spec, cfg.market.n)
            alt = simulate_paths(cfg.market, cfg.liability, cfg.objective, ConstantMixPolicy(w), cfg.sim, cfg.x0)
        res = paired_comparison(base, alt, cfg.objective)
        res["alternative"] = label
        rows.append(res)
    header = ["alternative", "J_optimal", "se_optimal", "J_alternative", "se_alternative", "difference", "paired_se"]
    with open(out / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([r["alternative"]] + [repr(float(r[k])) for k in ("J_a", "se_a", "J_b", "se_b", "diff", "se_diff")])
    _write_manifest(out, "compare", cfg, config_path, {"alternatives": list(alternatives)})
    print(f"seed {cfg.sim.seed}, paths {cfg.sim.n_paths}")
    for r in rows:
        print(f"{r['alternative']:>10s}: J_opt={r['J_a']:.6g}  J_alt={r['J_b']:.6g}  "
              f"diff={r['diff']:.6g} +/- {r['se_diff']:.3g}")
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lqgtrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config file, or a bundled name: artificial, empirical")
    common.add_argument("--seed", type=int, help="override [simulation] seed")
    common.add_argument("--paths", type=int, help="override [simulation] paths")
    common.add_argument("--out", help="override [output] dir")
    common.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("solve", parents=[common], help="solve the coefficient ODEs and write riccati.csv")
    sub.add_parser("simulate", parents=[common], help="simulate the optimal strategy and write reports")
    cmp_ = sub.add_parser("compare", parents=[common], help="compare against constant-mix alternatives")
    cmp_.add_argument("--alternative", action="append",
                      help="cash, bond, equal, optimal, or a JSON weight list; repeatable "
                           "(default: cash, bond, equal)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {("simulation", "seed"): args.seed, ("simulation", "paths"): args.paths,
                 ("output", "dir"): args.out}
    try:
        cfg = load_config(args.config, overrides)
        log.info("loaded %s", args.config)
        if args.command == "solve":
            run_solve(cfg, args.config)
        elif args.command == "simulate":
            run_simulate(cfg, args.config)
        else:
            run_compare(cfg, args.alternative or ["cash", "bond", "equal"], args.config)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
