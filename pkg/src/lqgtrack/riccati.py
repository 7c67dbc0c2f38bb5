"""Backward Riccati-type ODEs behind the optimal tracking strategy.

The value function is the quadratic form

    V(t, x, y) = F00 x^2 + 2 x F0~^T y + y^T F~ y + G0 x + G~^T y + g

and its coefficients solve, with mu = b - r 1, Sigma = sigma_S sigma_S^T,
K = sigma_S sigma_Y^T, theta = mu^T Sigma^-1 mu, k = K^T Sigma^-1 mu and
Q = K^T Sigma^-1 K,

    F00' = -gamma1 - 2 r F00 + theta F00
    F0~' =  gamma1 a - r F0~ - alpha^T F0~ + theta F0~
    G0'  = -r G0 - 2 h^T F0~ + theta G0 + 2 k^T F0~
    F~'  = -gamma1 a a^T - alpha^T F~ - F~ alpha + (theta / F00) F0~ F0~^T
    G~'  = -alpha^T G~ - 2 F~ h + (theta G0 / F00) F0~ + (2 k^T F0~ / F00) F0~
    g'   = -h^T G~ - tr(sigma_Y sigma_Y^T F~) + theta G0^2 / (4 F00)
           + G0 k^T F0~ / F00 + F0~^T Q F0~ / F00

with terminal data F00 = gamma2, F0~ = -gamma2 A, F~ = gamma2 A A^T and
zeros elsewhere. ``terminal="doubled"`` replaces F0~(T) by -2 gamma2 A.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .exceptions import ConfigError, MissingValueTerms, NonPositiveF00, OutOfRange, SingularDiffusion
from .model import LiabilityParams, MarketParams, Objective, check_dimensions

DEFAULT_STEP = 1.0 / 400.0
F00_FLOOR = 1e-12
TERMINAL_SCALE = {"consistent": 1.0, "doubled": 2.0}


def coefficient_table(market: MarketParams, liability: LiabilityParams, objective: Objective, times) -> dict:
    """Evaluate every ODE coefficient at ``times`` in one batch."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    d = market.d
    r = market.r.sample(times)
    mu = market.b.sample(times) - r[:, None]
    sig = market.sigma_S.sample(times)
    sig_y = liability.sigma_Y_sample(times, d)
    gram = sig @ np.swapaxes(sig, 1, 2)
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularDiffusion("sigma_S sigma_S^T is not positive definite on the grid") from exc
    cross = sig @ np.swapaxes(sig_y, 1, 2)  # (K, n, m)
    rhs = np.concatenate([mu[:, :, None], cross], axis=2)
    sol = np.linalg.solve(gram, rhs)
    w, w_cross = sol[:, :, 0], sol[:, :, 1:]
    return {
        "t": times,
        "r": r,
        "mu": mu,
        "theta": np.einsum("ki,ki->k", mu, w),
        "k": np.einsum("kim,ki->km", cross, w),
        "Q": np.swapaxes(cross, 1, 2) @ w_cross,
        "alpha": liability.alpha.sample(times),
        "h": liability.h.sample(times),
        "SY": sig_y @ np.swapaxes(sig_y, 1, 2),
        "a": objective.a.sample(times),
    }


@njit(cache=True)
def _rhs(r, th, k, Q, al, h, a, SY, z, m, g1, out):
    """Time derivative d/dt of the packed state, written into ``out``."""
    F00 = z[0]
    F0 = z[1:1 + m]
    G0 = z[1 + m]
    F = z[2 + m:2 + m + m * m].reshape((m, m))
    G = z[2 + m + m * m:2 + 2 * m + m * m]
    # with gamma2 = 0 every quotient term is 0/0 at the horizon; its limit is 0
    inv = 1.0 / F00 if F00 > 1e-300 else 0.0
    kF0 = 0.0
    hF0 = 0.0
    hG = 0.0
    for p in range(m):
        kF0 += k[p] * F0[p]
        hF0 += h[p] * F0[p]
        hG += h[p] * G[p]
    out[0] = -g1 - 2.0 * r * F00 + th * F00
    out[1 + m] = -r * G0 - 2.0 * hF0 + th * G0 + 2.0 * kF0
    trace = 0.0
    quad = 0.0
    for p in range(m):
        aF0 = 0.0
        aG = 0.0
        Fh = 0.0
        for q in range(m):
            aF0 += al[q, p] * F0[q]
            aG += al[q, p] * G[q]
            Fh += F[p, q] * h[q]
            quad += F0[p] * Q[p, q] * F0[q]
            trace += SY[p, q] * F[q, p]
            aFpq = 0.0
            aFqp = 0.0
            for s in range(m):
                aFpq += al[s, p] * F[s, q]
                aFqp += al[s, q] * F[s, p]
            out[2 + m + p * m + q] = (-g1 * a[p] * a[q] - aFpq - aFqp
                                      + th * inv * F0[p] * F0[q])
        out[1 + p] = g1 * a[p] - r * F0[p] - aF0 + th * F0[p]
        out[2 + m + m * m + p] = -aG - 2.0 * Fh + (th * G0 + 2.0 * kF0) * inv * F0[p]
    out[out.size - 1] = -hG - trace + (0.25 * th * G0 * G0 + G0 * kF0 + quad) * inv


@njit(cache=True)
def _rk4_backward(r, th, k, Q, al, h, a, SY, z0, m, g1, hstep, n_steps, floor):
    """Classic RK4 in s = T_solve - t; row 2j of the coefficient arrays is s = j * hstep.

    Returns the states and the index of the first step where F00 <= floor (-1 if none).
    """
    size = z0.size
    states = np.empty((n_steps + 1, size))
    states[0] = z0
    z = z0.copy()
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    f0 = 2 + m
    for j in range(n_steps):
        i = 2 * j
        _rhs(r[i], th[i], k[i], Q[i], al[i], h[i], a[i], SY[i], z, m, g1, k1)
        k1 *= -1.0
        _rhs(r[i + 1], th[i + 1], k[i + 1], Q[i + 1], al[i + 1], h[i + 1], a[i + 1], SY[i + 1],
             z + 0.5 * hstep * k1, m, g1, k2)
        k2 *= -1.0
        _rhs(r[i + 1], th[i + 1], k[i + 1], Q[i + 1], al[i + 1], h[i + 1], a[i + 1], SY[i + 1],
             z + 0.5 * hstep * k2, m, g1, k3)
        k3 *= -1.0
        _rhs(r[i + 2], th[i + 2], k[i + 2], Q[i + 2], al[i + 2], h[i + 2], a[i + 2], SY[i + 2],
             z + hstep * k3, m, g1, k4)
        k4 *= -1.0
        z = z + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # F~ is symmetric; remove round-off asymmetry
        for p in range(m):
            for q in range(p + 1, m):
                avg = 0.5 * (z[f0 + p * m + q] + z[f0 + q * m + p])
                z[f0 + p * m + q] = avg
                z[f0 + q * m + p] = avg
        states[j + 1] = z
        if not z[0] > floor:
            return states, j + 1
    return states, -1


@dataclass(frozen=True)
class RiccatiSolution:
    """ODE coefficients sampled on an increasing grid over ``[0, T_solve]``."""

    grid: np.ndarray
    F00: np.ndarray
    F0_tilde: np.ndarray
    G0: np.ndarray
    F_tilde: Optional[np.ndarray]
    G_tilde: Optional[np.ndarray]
    g: Optional[np.ndarray]
    T: float
    T_solve: float
    terminal: str = "consistent"

    @property
    def m(self) -> int:
        return self.F0_tilde.shape[1]

    @property
    def has_value_terms(self) -> bool:
        return self.F_tilde is not None and self.G_tilde is not None and self.g is not None

    def _locate(self, t: float):
        tol = 1e-12 * max(1.0, self.T_solve)
        if not (-tol <= t <= self.T_solve + tol):
            raise OutOfRange(f"t={t} outside [0, {self.T_solve}]")
        grid = self.grid
        j = int(np.clip(np.searchsorted(grid, t, side="right") - 1, 0, grid.size - 2))
        w = (min(max(t, grid[0]), grid[-1]) - grid[j]) / (grid[j + 1] - grid[j])
        return j, w

    @staticmethod
    def _lerp(arr, j, w):
        return (1.0 - w) * arr[j] + w * arr[j + 1]

    def evaluate(self, t: float):
        """``(F00, F0_tilde, G0)`` at ``t`` by linear interpolation."""
        j, w = self._locate(t)
        return float(self._lerp(self.F00, j, w)), self._lerp(self.F0_tilde, j, w), float(self._lerp(self.G0, j, w))

    def evaluate_value_terms(self, t: float):
        """``(F_tilde, G_tilde, g)`` at ``t``."""
        if not self.has_value_terms:
            raise MissingValueTerms("value-function terms were not solved")
        j, w = self._locate(t)
        return self._lerp(self.F_tilde, j, w), self._lerp(self.G_tilde, j, w), float(self._lerp(self.g, j, w))

    def relative_variation(self, t0: float, t1: float) -> dict:
        """Range of each strategy coefficient on ``[t0, t1]`` relative to its peak magnitude there.

        Identically zero series report 0.
        """
        mask = (self.grid >= t0 - 1e-12) & (self.grid <= t1 + 1e-12)
        out = {}
        for name, series in self._strategy_series().items():
            s = series[mask]
            scale = np.max(np.abs(s))
            out[name] = 0.0 if scale < F00_FLOOR else float((s.max() - s.min()) / scale)
        return out

    def absolute_variation(self, t0: float, t1: float) -> dict:
        mask = (self.grid >= t0 - 1e-12) & (self.grid <= t1 + 1e-12)
        return {name: float(np.ptp(s[mask])) for name, s in self._strategy_series().items()}

    def _strategy_series(self) -> dict:
        series = {"F00": self.F00}
        for i in range(self.m):
            series[f"F0_tilde_{i + 1}"] = self.F0_tilde[:, i]
        series["G0"] = self.G0
        return series

    def csv_header(self) -> list:
        m = self.m
        head = ["t", "F00"] + [f"F0_tilde_{i + 1}" for i in range(m)] + ["G0"]
        if self.has_value_terms:
            head += [f"F_tilde_{i + 1}_{j + 1}" for i in range(m) for j in range(i, m)]
            head += [f"G_tilde_{i + 1}" for i in range(m)] + ["g"]
        return head

    def to_csv(self, path) -> None:
        m = self.m
        iu = np.triu_indices(m)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.csv_header())
            for j, t in enumerate(self.grid):
                row = [t, self.F00[j], *self.F0_tilde[j], self.G0[j]]
                if self.has_value_terms:
                    row += [*self.F_tilde[j][iu], *self.G_tilde[j], self.g[j]]
                writer.writerow([repr(float(v)) for v in row])


def solve_riccati(market: MarketParams, liability: LiabilityParams, objective: Objective,
                  solver_horizon: Optional[float] = None, step: float = DEFAULT_STEP,
                  terminal: str = "consistent") -> RiccatiSolution:
    """Integrate all six coefficient ODEs backward from ``solver_horizon`` with fixed-step RK4.

    The march runs forward in ``s = solver_horizon - t``. If the horizon is
    not a whole number of steps, the step is shortened to fit.
    """
    check_dimensions(market, liability, objective)
    T_solve = objective.T if solver_horizon is None else float(solver_horizon)
    if T_solve < objective.T - 1e-12:
        raise ConfigError(f"solver horizon {T_solve} is shorter than the objective horizon {objective.T}")
    if not step > 0:
        raise ConfigError("step must be positive")
    if terminal not in TERMINAL_SCALE:
        raise ConfigError(f"terminal must be one of {sorted(TERMINAL_SCALE)}, got {terminal!r}")

    n_steps = max(1, int(np.ceil(T_solve / step - 1e-9)))
    hstep = T_solve / n_steps
    half_times = T_solve - 0.5 * hstep * np.arange(2 * n_steps + 1)
    coef = coefficient_table(market, liability, objective, half_times)

    m = liability.m
    g1, g2 = objective.gamma1, objective.gamma2
    A = np.asarray(objective.A)
    z = np.concatenate([[g2], -TERMINAL_SCALE[terminal] * g2 * A, [0.0],
                        (g2 * np.outer(A, A)).ravel(), np.zeros(m), [0.0]])
    f_sl = slice(2 + m, 2 + m + m * m)
    c = {key: np.ascontiguousarray(val, dtype=np.float64) for key, val in coef.items()}
    states, bad = _rk4_backward(c["r"], c["theta"], c["k"], c["Q"], c["alpha"], c["h"], c["a"], c["SY"],
                                z, m, g1, hstep, n_steps, F00_FLOOR)
    if bad >= 0:
        raise NonPositiveF00(f"F00 fell to {states[bad, 0]:.3e} at t={T_solve - bad * hstep:.6g}")
    states = states[::-1]
    grid = hstep * np.arange(n_steps + 1)
    grid[-1] = T_solve

    def _ro(a):
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        return a

    return RiccatiSolution(
        grid=_ro(grid),
        F00=_ro(states[:, 0]),
        F0_tilde=_ro(states[:, 1:1 + m]),
        G0=_ro(states[:, 1 + m]),
        F_tilde=_ro(states[:, f_sl].reshape(-1, m, m)),
        G_tilde=_ro(states[:, 2 + m + m * m:2 + 2 * m + m * m]),
        g=_ro(states[:, -1]),
        T=objective.T,
        T_solve=T_solve,
        terminal=terminal,
    )


def stationary_solve(market: MarketParams, liability: LiabilityParams, objective: Objective,
                     padding_horizon: float, step: float = DEFAULT_STEP,
                     terminal: str = "consistent") -> RiccatiSolution:
    """Solve over the longer horizon ``padding_horizon`` so the coefficients on
    ``[0, objective.T]`` sit near their stationary values."""
    if padding_horizon < objective.T:
        raise ConfigError("padding horizon must not be shorter than the objective horizon")
    return solve_riccati(market, liability, objective, padding_horizon, step, terminal)


def evaluate(solution: RiccatiSolution, t: float):
    return solution.evaluate(t)
