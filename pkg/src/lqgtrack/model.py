"""Market, liability and objective types.

Units are fixed package-wide: time in years, money in trillion yen.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .exceptions import ConfigError, NotPositiveDefinite, NotSymmetric, SingularDiffusion

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-14

# GPIF expected returns and covariance for domestic bond, domestic stock,
# foreign bond, foreign stock.
GPIF_DRIFT = np.array([0.03, 0.048, 0.035, 0.05])
GPIF_COVARIANCE = np.array([
    [0.00297025, 0.0018189375, -0.000439488, -0.0005409125],
    [0.0018189375, 0.04950625, -0.00777504, 0.0119248875],
    [-0.000439488, -0.00777504, 0.01806336, 0.01467312],
    [-0.0005409125, 0.0119248875, 0.01467312, 0.03940225],
])
ASSET_NAMES = ("domestic_bond", "domestic_stock", "foreign_bond", "foreign_stock")


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class TimeFunction:
    """Deterministic function of time: a constant or a knot table.

    Tables interpolate linearly (``kind="linear"``) or hold the left knot
    value (``kind="previous"``); outside the knot range the nearest endpoint
    value is returned. Values may be scalars, vectors or matrices.
    """

    __slots__ = ("times", "values", "kind")

    def __init__(self, values, times=None, kind: str = "linear"):
        if kind not in ("linear", "previous"):
            raise ConfigError(f"unknown interpolation kind {kind!r}")
        values = np.array(values, dtype=float)
        if times is not None:
            times = np.array(times, dtype=float).reshape(-1)
            if values.shape[:1] != times.shape:
                raise ConfigError("TimeFunction needs one value per knot")
            if times.size == 0:
                raise ConfigError("TimeFunction table needs at least one knot")
            if np.any(np.diff(times) <= 0):
                raise ConfigError("TimeFunction knots must be strictly increasing")
            if times.size == 1:
                values, times = values[0], None
        if not np.all(np.isfinite(values)):
            raise ConfigError("TimeFunction values must be finite")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "times", None if times is None else _frozen(times))
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("TimeFunction is immutable")

    @classmethod
    def coerce(cls, obj) -> "TimeFunction":
        if isinstance(obj, TimeFunction):
            return obj
        return cls(obj)

    @property
    def is_constant(self) -> bool:
        return self.times is None

    @property
    def shape(self) -> tuple:
        return self.values.shape if self.times is None else self.values.shape[1:]

    def sample(self, t) -> np.ndarray:
        """Evaluate at an array of times; returns shape ``(len(t),) + self.shape``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.times is None:
            return np.broadcast_to(self.values, t.shape + self.shape).copy()
        knots = self.times
        tt = np.clip(t, knots[0], knots[-1])
        if self.kind == "previous":
            idx = np.searchsorted(knots, tt, side="right") - 1
            return self.values[np.clip(idx, 0, knots.size - 1)]
        idx = np.clip(np.searchsorted(knots, tt, side="right") - 1, 0, knots.size - 2)
        w = (tt - knots[idx]) / (knots[idx + 1] - knots[idx])
        w = w.reshape(w.shape + (1,) * len(self.shape))
        return (1.0 - w) * self.values[idx] + w * self.values[idx + 1]

    def __call__(self, t: float) -> np.ndarray:
        out = self.sample([t])[0]
        return out if out.ndim else float(out)

    def knot_times(self) -> np.ndarray:
        return np.empty(0) if self.times is None else np.asarray(self.times)

    def __repr__(self):
        if self.times is None:
            return f"TimeFunction({self.values.tolist()!r})"
        return f"TimeFunction(<{self.times.size} knots, shape={self.shape}, kind={self.kind}>)"


def cholesky_lower(Sigma) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == Sigma``.

    Inputs within 1e-12 of symmetric are symmetrized first. A pivot at or
    below 1e-14 raises :class:`NotPositiveDefinite`.
    """
    S = np.array(Sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {S.shape}")
    if np.max(np.abs(S - S.T), initial=0.0) > SYMMETRY_TOL:
        raise NotSymmetric("covariance matrix is not symmetric within 1e-12")
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    L = np.zeros_like(S)
    for j in range(n):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > PIVOT_TOL:
            raise NotPositiveDefinite(f"pivot {j} is {pivot:.3e}")
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate ``r``, drifts ``b`` and volatility loading ``sigma_S`` (n x d)."""

    r: TimeFunction
    b: TimeFunction
    sigma_S: TimeFunction
    s0_riskfree: float = 1.0
    s0: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("r", "b", "sigma_S"):
            object.__setattr__(self, name, TimeFunction.coerce(getattr(self, name)))
        if self.r.shape != ():
            raise ConfigError("market.r must be scalar-valued")
        if len(self.b.shape) != 1:
            raise ConfigError("market.b must be vector-valued")
        n = self.b.shape[0]
        if len(self.sigma_S.shape) != 2 or self.sigma_S.shape[0] != n:
            raise ConfigError(f"market.sigma_S must be {n} x d, got {self.sigma_S.shape}")
        if self.sigma_S.shape[1] < n:
            raise ConfigError("Brownian dimension d must be at least the asset count")
        s0 = np.ones(n) if self.s0 is None else np.array(self.s0, dtype=float)
        if s0.shape != (n,):
            raise ConfigError("market.s0 must have one entry per asset")
        object.__setattr__(self, "s0", _frozen(s0))
        object.__setattr__(self, "s0_riskfree", float(self.s0_riskfree))

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def d(self) -> int:
        return self.sigma_S.shape[1]

    def gram(self, t: float) -> np.ndarray:
        s = self.sigma_S(t)
        return s @ s.T


@dataclass(frozen=True)
class LiabilityParams:
    """Affine benchmark-component dynamics ``dY = (alpha Y + h) dt + sigma_Y dW``.

    ``sigma_Y=None`` means no liability noise; its width is then taken from
    the market it is paired with.
    """

    alpha: TimeFunction
    h: TimeFunction
    y0: np.ndarray
    sigma_Y: Optional[TimeFunction] = None

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float).reshape(-1)
        object.__setattr__(self, "y0", _frozen(y0))
        m = y0.size
        alpha = TimeFunction.coerce(self.alpha)
        h = TimeFunction.coerce(self.h)
        if alpha.shape != (m, m):
            raise ConfigError(f"liability.alpha must be {m} x {m}, got {alpha.shape}")
        if h.shape != (m,):
            raise ConfigError(f"liability.h must have length {m}, got {h.shape}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "h", h)
        if self.sigma_Y is not None:
            sy = TimeFunction.coerce(self.sigma_Y)
            if len(sy.shape) != 2 or sy.shape[0] != m:
                raise ConfigError(f"liability.sigma_Y must be {m} x d, got {sy.shape}")
            object.__setattr__(self, "sigma_Y", sy)

    @property
    def m(self) -> int:
        return self.y0.size

    @property
    def d(self) -> Optional[int]:
        return None if self.sigma_Y is None else self.sigma_Y.shape[1]

    def sigma_Y_sample(self, t, d: int) -> np.ndarray:
        """``sigma_Y`` at times ``t`` as a ``(len(t), m, d)`` array."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.sigma_Y is None:
            return np.zeros(t.shape + (self.m, d))
        if self.sigma_Y.shape[1] != d:
            raise ConfigError(f"liability.sigma_Y has {self.sigma_Y.shape[1]} columns, market has d={d}")
        return self.sigma_Y.sample(t)


@dataclass(frozen=True)
class Objective:
    """Tracking weights and benchmark projections of the quadratic cost."""

    gamma1: float
    gamma2: float
    a: TimeFunction
    A: np.ndarray
    T: float

    def __post_init__(self):
        g1, g2 = float(self.gamma1), float(self.gamma2)
        if g1 < 0 or g2 < 0:
            raise ConfigError("gamma1 and gamma2 must be non-negative")
        if g1 + g2 <= 0:
            raise ConfigError("gamma1 + gamma2 must be positive")
        if not float(self.T) > 0:
            raise ConfigError("objective horizon T must be positive")
        a = TimeFunction.coerce(self.a)
        A = np.array(self.A, dtype=float).reshape(-1)
        if a.shape != A.shape:
            raise ConfigError(f"a(t) has shape {a.shape} but A has shape {A.shape}")
        object.__setattr__(self, "gamma1", g1)
        object.__setattr__(self, "gamma2", g2)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "A", _frozen(A))

    @property
    def m(self) -> int:
        return self.A.size


def check_dimensions(market: MarketParams, liability: LiabilityParams, objective: Optional[Objective] = None):
    if liability.d is not None and liability.d != market.d:
        raise ConfigError(f"liability noise width {liability.d} differs from market d={market.d}")
    if objective is not None and objective.m != liability.m:
        raise ConfigError(f"objective has {objective.m} benchmark weights, liability has m={liability.m}")


def excess_drift(market: MarketParams, t: float) -> np.ndarray:
    return market.b(t) - market.r(t) * np.ones(market.n)


def risk_quadratic(market: MarketParams, t: float) -> float:
    """``(b - r1)^T (sigma_S sigma_S^T)^{-1} (b - r1)`` at time ``t``."""
    mu = excess_drift(market, t)
    try:
        L = np.linalg.cholesky(market.gram(t))
    except np.linalg.LinAlgError as exc:
        raise SingularDiffusion(f"sigma_S sigma_S^T is singular at t={t}") from exc
    z = np.linalg.solve(L, mu)
    return float(z @ z)


def market_from_covariance(b, covariance, r=0.0, m: int = 0, factor: str = "lower",
                           s0_riskfree: float = 1.0, s0=None) -> MarketParams:
    """Build a market whose asset noise is a Cholesky factor of ``covariance``.

    The n x n factor is padded with ``m`` zero columns so the asset and
    benchmark noises share one (n + m)-dimensional Brownian motion.
    ``factor="upper"`` uses ``L.T`` instead of ``L`` (the convention of
    tools whose ``chol`` returns the upper factor); the resulting asset
    covariance is then ``L.T @ L`` rather than ``covariance``.
    """
    L = cholesky_lower(covariance)
    if factor == "upper":
        L = L.T
    elif factor != "lower":
        raise ConfigError(f"factor must be 'lower' or 'upper', got {factor!r}")
    sigma = np.hstack([L, np.zeros((L.shape[0], m))])
    return MarketParams(r=r, b=b, sigma_S=sigma, s0_riskfree=s0_riskfree, s0=s0)


def gpif_market(m: int = 2, factor: str = "lower") -> MarketParams:
    """Four-asset GPIF market with zero risk-free rate."""
    return market_from_covariance(GPIF_DRIFT, GPIF_COVARIANCE, r=0.0, m=m, factor=factor)


def shortfall_objective(T: float = 30.0) -> Objective:
    """Unit weights tracking the shortfall ``B - C`` of ``Y = (C, B)``."""
    return Objective(gamma1=1.0, gamma2=1.0, a=[-1.0, 1.0], A=[-1.0, 1.0], T=T)
