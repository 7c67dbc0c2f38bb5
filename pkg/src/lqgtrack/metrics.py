"""Hedging-error statistics, cost estimates and allocation summaries."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import LiabilityParams, Objective
from .simulate import PathSet

RELATIVE_FLOOR = 1e-9
QUANTILES = (0.1, 0.5, 0.9)


def benchmark_paths(paths: PathSet, objective: Objective) -> np.ndarray:
    """``a(t).Y`` per path and node, with ``A.Y`` on nodes at or past the horizon."""
    proj = objective.a.sample(paths.grid)
    proj[paths.grid >= objective.T - 1e-12] = objective.A
    return np.einsum("pkm,km->pk", paths.y_paths, proj)


@dataclass(frozen=True)
class HedgeReport:
    grid: np.ndarray
    E_bar: np.ndarray
    relative_error: np.ndarray
    benchmark_mean: np.ndarray
    J: float
    J_stderr: float
    mean_xi: np.ndarray
    mean_money: np.ndarray
    E: Optional[np.ndarray] = None

    def time_averaged_relative_error(self) -> float:
        span = self.grid[-1] - self.grid[0]
        return float(np.trapezoid(self.relative_error, self.grid) / span)

    def to_csv(self, path) -> None:
        n = self.mean_xi.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "E_bar", "relative_error", "benchmark_mean"]
                            + [f"mean_xi_{i + 1}" for i in range(n)] + ["mean_money_account"])
            for k, t in enumerate(self.grid):
                row = [t, self.E_bar[k], self.relative_error[k], self.benchmark_mean[k],
                       *self.mean_xi[k], self.mean_money[k]]
                writer.writerow([repr(float(v)) for v in row])


def path_costs(paths: PathSet, objective: Objective) -> np.ndarray:
    """Realized cost of every path: trapezoidal running term plus terminal penalty."""
    running_bm = np.einsum("pkm,km->pk", paths.y_paths, objective.a.sample(paths.grid))
    sq = (running_bm - paths.x_paths) ** 2
    running = objective.gamma1 * np.trapezoid(sq, paths.grid, axis=1)
    terminal = (paths.y_paths[:, -1] @ np.asarray(objective.A) - paths.x_paths[:, -1]) ** 2
    return running + objective.gamma2 * terminal


def _mean_and_stderr(values: np.ndarray):
    n = values.size
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return float(np.mean(values)), se


def estimate_cost(paths: PathSet, objective: Objective, liability: Optional[LiabilityParams] = None):
    """Monte Carlo estimate of the expected cost and its standard error."""
    return _mean_and_stderr(path_costs(paths, objective))


def paired_comparison(paths_a: PathSet, paths_b: PathSet, objective: Objective) -> dict:
    """Costs of two runs that share Brownian increments, and their paired difference ``a - b``."""
    if paths_a.n_paths != paths_b.n_paths:
        raise ValueError("paired comparison needs equal path counts")
    ca, cb = path_costs(paths_a, objective), path_costs(paths_b, objective)
    J_a, se_a = _mean_and_stderr(ca)
    J_b, se_b = _mean_and_stderr(cb)
    diff, se_diff = _mean_and_stderr(ca - cb)
    return {"J_a": J_a, "se_a": se_a, "J_b": J_b, "se_b": se_b, "diff": diff, "se_diff": se_diff}


def hedging_error(paths: PathSet, objective: Objective, liability: Optional[LiabilityParams] = None,
                  keep_paths: bool = True) -> HedgeReport:
    """Per-path absolute tracking error ``|benchmark - X|`` and its cross-path mean.

    The relative error divides by the absolute cross-path mean benchmark,
    floored at 1e-9.
    """
    if liability is not None and liability.m != paths.y_paths.shape[2]:
        raise ValueError("liability dimension does not match the paths")
    bm = benchmark_paths(paths, objective)
    E = np.abs(bm - paths.x_paths)
    E_bar = E.mean(axis=0)
    bm_mean = bm.mean(axis=0)
    rel = E_bar / np.maximum(np.abs(bm_mean), RELATIVE_FLOOR)
    J, se = estimate_cost(paths, objective)
    return HedgeReport(
        grid=paths.grid,
        E_bar=E_bar,
        relative_error=rel,
        benchmark_mean=bm_mean,
        J=J,
        J_stderr=se,
        mean_xi=paths.xi_paths.mean(axis=0),
        mean_money=paths.money_account().mean(axis=0),
        E=E if keep_paths else None,
    )


@dataclass(frozen=True)
class AllocationReport:
    """Mean and 10/50/90 quantiles of each holding per node; ``stats`` is ``(node, series, 4)``."""

    grid: np.ndarray
    names: tuple
    stats: np.ndarray

    def series(self, name: str) -> dict:
        j = self.names.index(name)
        return {"mean": self.stats[:, j, 0], "q10": self.stats[:, j, 1],
                "q50": self.stats[:, j, 2], "q90": self.stats[:, j, 3]}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t"] + [f"{name}_{stat}" for name in self.names for stat in ("mean", "q10", "q50", "q90")])
            for k, t in enumerate(self.grid):
                writer.writerow([repr(float(v)) for v in [t, *self.stats[k].ravel()]])


def allocation_report(paths: PathSet, asset_names=None) -> AllocationReport:
    n = paths.xi_paths.shape[2]
    names = tuple(asset_names) if asset_names is not None else tuple(f"asset_{i + 1}" for i in range(n))
    if len(names) != n:
        raise ValueError("one name per asset expected")
    holdings = np.concatenate([paths.xi_paths, paths.money_account()[:, :, None]], axis=2)
    stats = np.empty(holdings.shape[1:] + (4,))
    stats[..., 0] = holdings.mean(axis=0)
    stats[..., 1:] = np.moveaxis(np.quantile(holdings, QUANTILES, axis=0), 0, -1)
    return AllocationReport(paths.grid, names + ("money_account",), stats)
