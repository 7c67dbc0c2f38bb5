"""Seeded Euler-Maruyama Monte Carlo for prices, benchmark components and wealth.

Every path owns a Philox substream keyed by ``(seed, path_index)``, so a
path's Brownian increments do not depend on how many other paths are run
or on which control is applied (common random numbers). Normals come from
``numpy.random.Generator.standard_normal`` (ziggurat).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigError, NonPositiveF00
from .model import LiabilityParams, MarketParams, Objective, check_dimensions

Control = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    dt: float
    seed: int
    T: float

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ConfigError("n_paths must be at least 1")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        steps = round(self.T / self.dt)
        if steps < 1 or abs(steps * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigError(f"T={self.T} is not a whole number of steps dt={self.dt}")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_steps(self) -> int:
        return round(self.T / self.dt)

    @property
    def grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path_index,))))


def brownian_increments(sim: SimConfig, d: int) -> np.ndarray:
    """Increments ``dW`` of shape ``(n_paths, n_steps, d)`` with variance ``dt``."""
    out = np.empty((sim.n_paths, sim.n_steps, d))
    if d == 0:
        return out
    scale = np.sqrt(sim.dt)
    for i in range(sim.n_paths):
        out[i] = scale * path_generator(sim.seed, i).standard_normal((sim.n_steps, d))
    return out


def coarsen_increments(dW: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive blocks of ``factor`` steps (same Brownian path, coarser grid)."""
    N, K, d = dW.shape
    if K % factor:
        raise ConfigError("step count is not divisible by the coarsening factor")
    return dW.reshape(N, K // factor, factor, d).sum(axis=2)


@dataclass(frozen=True)
class PathSet:
    """Dense Monte Carlo trajectories on the grid ``0, dt, ..., T``.

    Arrays are indexed ``[path, node, component]``; ``s0_path`` is shared by
    all paths because the money account is deterministic.
    """

    grid: np.ndarray
    s0_path: np.ndarray
    s_paths: np.ndarray
    y_paths: np.ndarray
    x_paths: np.ndarray
    xi_paths: np.ndarray
    config: SimConfig

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def n_paths(self) -> int:
        return self.x_paths.shape[0]

    def money_account(self) -> np.ndarray:
        return self.x_paths - self.xi_paths.sum(axis=2)

    def csv_header(self) -> list:
        n, m = self.s_paths.shape[2], self.y_paths.shape[2]
        return (["path_id", "t", "S0"] + [f"S_{i + 1}" for i in range(n)] + [f"Y_{j + 1}" for j in range(m)]
                + ["X"] + [f"xi_{i + 1}" for i in range(n)] + ["money_account"])

    def to_csv(self, path) -> None:
        money = self.money_account()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.csv_header())
            for p in range(self.n_paths):
                for k, t in enumerate(self.grid):
                    vals = [t, self.s0_path[k], *self.s_paths[p, k], *self.y_paths[p, k],
                            self.x_paths[p, k], *self.xi_paths[p, k], money[p, k]]
                    writer.writerow([p] + [repr(float(v)) for v in vals])


def simulate_paths(market: MarketParams, liability: LiabilityParams, objective: Optional[Objective],
                   control: Control, sim: SimConfig, x0: float, dW: Optional[np.ndarray] = None) -> PathSet:
    """Run the explicit Euler scheme for ``(S0, S, Y, X)`` under ``control``.

    The control is evaluated at the left node of each step. Wealth moves by
    the arithmetic asset returns, so negative Euler prices do not matter.
    ``dW`` overrides the seeded increments (shape ``(n_paths, n_steps, d)``).
    """
    check_dimensions(market, liability, objective)
    n, m, d = market.n, liability.m, market.d
    N, K = sim.n_paths, sim.n_steps
    if dW is None:
        dW = brownian_increments(sim, d)
    elif dW.shape != (N, K, d):
        raise ConfigError(f"dW must have shape {(N, K, d)}, got {dW.shape}")

    grid = sim.grid
    dt = sim.dt
    r = market.r.sample(grid)
    b = market.b.sample(grid)
    sig = market.sigma_S.sample(grid)
    alpha = liability.alpha.sample(grid)
    h = liability.h.sample(grid)
    sig_y = liability.sigma_Y_sample(grid, d)

    s0_path = np.empty(K + 1)
    s_paths = np.empty((N, K + 1, n))
    y_paths = np.empty((N, K + 1, m))
    x_paths = np.empty((N, K + 1))
    xi_paths = np.empty((N, K + 1, n))

    s0_path[0] = market.s0_riskfree
    s_paths[:, 0] = market.s0
    y_paths[:, 0] = liability.y0
    x_paths[:, 0] = float(x0)

    for k in range(K):
        t = grid[k]
        X, Y = x_paths[:, k], y_paths[:, k]
        xi = np.asarray(control(t, X, Y), dtype=float).reshape(N, n)
        xi_paths[:, k] = xi
        noise = dW[:, k, :]
        ret = b[k] * dt + noise @ sig[k].T
        s0_path[k + 1] = s0_path[k] * (1.0 + r[k] * dt)
        s_paths[:, k + 1] = s_paths[:, k] * (1.0 + ret)
        y_paths[:, k + 1] = Y + (Y @ alpha[k].T + h[k]) * dt + noise @ sig_y[k].T
        x_paths[:, k + 1] = X + np.sum(xi * ret, axis=1) + (X - xi.sum(axis=1)) * r[k] * dt

    # holdings at T by continuous extension; no step uses them
    try:
        xi_paths[:, K] = np.asarray(control(grid[K], x_paths[:, K], y_paths[:, K]), dtype=float).reshape(N, n)
    except NonPositiveF00:
        # F00(T) = gamma2 = 0 without padding: keep the last rebalanced holdings
        xi_paths[:, K] = xi_paths[:, K - 1]
    return PathSet(grid, s0_path, s_paths, y_paths, x_paths, xi_paths, sim)


def simulate_liability_only(liability: LiabilityParams, sim: SimConfig, d: Optional[int] = None):
    """Benchmark-component paths without a portfolio.

    Returns ``(grid, y_paths)`` with ``y_paths`` of shape ``(n_paths, n_steps + 1, m)``.
    With ``d`` given, noise is drawn from the same per-path streams as
    :func:`simulate_paths`.
    """
    m = liability.m
    N, K = sim.n_paths, sim.n_steps
    grid = sim.grid
    if d is None:
        d = liability.d or 0
    y = np.empty((N, K + 1, m))
    if m == 0:
        return grid, y
    alpha = liability.alpha.sample(grid)
    h = liability.h.sample(grid)
    noisy = liability.sigma_Y is not None and d > 0
    if noisy:
        sig_y = liability.sigma_Y_sample(grid, d)
        dW = brownian_increments(sim, d)
    y[:, 0] = liability.y0
    for k in range(K):
        Y = y[:, k]
        step = Y + (Y @ alpha[k].T + h[k]) * sim.dt
        if noisy:
            step = step + dW[:, k, :] @ sig_y[k].T
        y[:, k + 1] = step
    return grid, y
