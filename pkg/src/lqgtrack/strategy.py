"""Optimal feedback control, quadratic value function and comparison policies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConfigError, MissingValueTerms, NonPositiveF00, SingularDiffusion
from .model import LiabilityParams, MarketParams, Objective, check_dimensions
from .riccati import DEFAULT_STEP, F00_FLOOR, RiccatiSolution, solve_riccati


def _gram_factor(sig: np.ndarray):
    try:
        return cho_factor(sig @ sig.T, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDiffusion("sigma_S sigma_S^T is singular") from exc


@dataclass(frozen=True)
class FeedbackStrategy:
    """Amounts held in each risky asset as an affine function of wealth and benchmark state.

    Calling the strategy evaluates it for a batch of paths:
    ``strategy(t, x[N], y[N, m]) -> xi[N, n]``.
    """

    market: MarketParams
    liability: LiabilityParams
    objective: Objective
    riccati: RiccatiSolution

    def __post_init__(self):
        check_dimensions(self.market, self.liability, self.objective)
        if self.riccati.T_solve < self.objective.T - 1e-12:
            raise ConfigError("Riccati solution does not cover the objective horizon")
        if self.riccati.m != self.liability.m:
            raise ConfigError("Riccati solution and liability disagree on m")

    def __call__(self, t: float, x, y) -> np.ndarray:
        F00, F0, G0 = self.riccati.evaluate(t)
        if not F00 > F00_FLOOR:
            raise NonPositiveF00(f"F00({t}) = {F00:.3e}")
        mk = self.market
        sig = mk.sigma_S(t)
        sig_y = self.liability.sigma_Y_sample([t], mk.d)[0]
        fac = _gram_factor(sig)
        w = cho_solve(fac, mk.b(t) - mk.r(t))
        c = cho_solve(fac, sig @ sig_y.T @ F0) / F00
        x = np.asarray(x, dtype=float)
        gap = x + (np.asarray(y, dtype=float) @ F0) / F00 + G0 / (2.0 * F00)
        return -np.multiply.outer(gap, w) - c


@dataclass(frozen=True)
class ConstantMixPolicy:
    """Hold ``weights[i] * X`` in asset ``i``; the rest sits in the money account."""

    weights: Sequence[float]

    def __call__(self, t: float, x, y) -> np.ndarray:
        return np.multiply.outer(np.asarray(x, dtype=float), np.asarray(self.weights, dtype=float))


def make_strategy(market, liability, objective, padding_horizon=None, step=DEFAULT_STEP,
                  terminal="consistent") -> FeedbackStrategy:
    sol = solve_riccati(market, liability, objective, padding_horizon, step, terminal)
    return FeedbackStrategy(market, liability, objective, sol)


def optimal_control(strategy: FeedbackStrategy, t: float, x: float, y) -> np.ndarray:
    """Optimal risky-asset amounts at a single state."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return strategy(t, np.array([float(x)]), y)[0]


def money_account(x, xi) -> np.ndarray:
    return np.asarray(x) - np.sum(xi, axis=-1)


def value_function(strategy: FeedbackStrategy, t: float, x: float, y) -> float:
    """Quadratic value function at ``(t, x, y)``.

    Only the ``"consistent"`` terminal convention yields the value function of
    the tracking problem; the ``"doubled"`` variant is rejected.
    """
    sol = strategy.riccati
    if not sol.has_value_terms:
        raise MissingValueTerms("value-function terms were not solved")
    if sol.terminal != "consistent":
        raise ConfigError("value function requires terminal='consistent'")
    y = np.asarray(y, dtype=float)
    F00, F0, G0 = sol.evaluate(t)
    F, G, g = sol.evaluate_value_terms(t)
    return float(F00 * x * x + 2.0 * x * (F0 @ y) + y @ F @ y + G0 * x + G @ y + g)


def value_derivatives(strategy: FeedbackStrategy, t: float, x: float, y):
    """``(V_x, V_xx, V_y, V_xy, V_yy)`` of the quadratic value function."""
    sol = strategy.riccati
    F00, F0, G0 = sol.evaluate(t)
    F, G, _ = sol.evaluate_value_terms(t)
    y = np.asarray(y, dtype=float)
    return (2 * F00 * x + 2 * F0 @ y + G0, 2 * F00, 2 * F0 * x + 2 * F @ y + G, 2 * F0, 2 * F)


def hamiltonian(strategy: FeedbackStrategy, t: float, x: float, y, xi) -> float:
    """Generator of ``(X, Y)`` under control ``xi`` applied to V, plus the running cost."""
    mk, lb, ob = strategy.market, strategy.liability, strategy.objective
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    Vx, Vxx, Vy, Vxy, Vyy = value_derivatives(strategy, t, x, y)
    sig = mk.sigma_S(t)
    sig_y = lb.sigma_Y_sample([t], mk.d)[0]
    r = mk.r(t)
    drift_x = r * x + (mk.b(t) - r) @ xi
    drift_y = lb.alpha(t) @ y + lb.h(t)
    diffusion = 0.5 * (xi @ sig @ sig.T @ xi * Vxx + 2.0 * xi @ sig @ sig_y.T @ Vxy
                       + np.trace(sig_y @ sig_y.T @ Vyy))
    running = ob.gamma1 * (ob.a(t) @ y - x) ** 2
    return float(drift_x * Vx + drift_y @ Vy + diffusion + running)


def benchmark_value(objective: Objective, liability: LiabilityParams, t: float, y) -> float:
    """Benchmark level ``a(t).y``; at the horizon the terminal projection ``A.y``."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != liability.m:
        raise ConfigError(f"benchmark state must have {liability.m} components")
    if t >= objective.T:
        return float(np.asarray(objective.A) @ y)
    return float(objective.a(t) @ y)


class LiabilityTracker(BaseEstimator):
    """Estimator-style wrapper around the optimal tracking strategy.

    ``fit(market, liability)`` solves the coefficient ODEs. ``predict`` maps
    state rows ``[t, wealth, y_1, ..., y_m]`` to risky-asset amounts and
    ``value`` maps them to the value function.

    Parameters
    ----------
    gamma1, gamma2 : float
        Running and terminal tracking weights.
    a, A : sequence of float
        Running and terminal benchmark projections.
    horizon : float
        Investment horizon T in years.
    padding_horizon : float or None
        Solver horizon; ``None`` solves on ``[0, horizon]``.
    step : float
        RK4 step in years.
    terminal : {"consistent", "doubled"}
        Terminal condition convention for the cross coefficient.
    """

    def __init__(self, gamma1=1.0, gamma2=1.0, a=(-1.0, 1.0), A=(-1.0, 1.0), horizon=30.0,
                 padding_horizon=None, step=DEFAULT_STEP, terminal="consistent"):
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.a = a
        self.A = A
        self.horizon = horizon
        self.padding_horizon = padding_horizon
        self.step = step
        self.terminal = terminal

    def fit(self, market: MarketParams, liability: LiabilityParams):
        objective = Objective(self.gamma1, self.gamma2, self.a, self.A, self.horizon)
        self.strategy_ = make_strategy(market, liability, objective, self.padding_horizon,
                                       self.step, self.terminal)
        self.riccati_ = self.strategy_.riccati
        self.n_assets_ = market.n
        self.n_features_in_ = 2 + liability.m
        return self

    def _check_states(self, X):
        check_is_fitted(self, "strategy_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns [t, x, y...], got {X.shape[1]}")
        return X

    def predict(self, X) -> np.ndarray:
        X = self._check_states(X)
        out = np.empty((X.shape[0], self.n_assets_))
        for t in np.unique(X[:, 0]):
            rows = X[:, 0] == t
            out[rows] = self.strategy_(float(t), X[rows, 1], X[rows, 2:])
        return out

    def value(self, X) -> np.ndarray:
        X = self._check_states(X)
        return np.array([value_function(self.strategy_, row[0], row[1], row[2:]) for row in X])
