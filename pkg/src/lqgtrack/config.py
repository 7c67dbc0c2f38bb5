"""Run configuration: a sectioned key-value file with JSON-style values.

Arrays are bracketed comma lists, matrices row-major nested lists, and a
time-dependent coefficient may be given as ``{"times": [...], "values": [...]}``.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .calibrate import (DEFAULT_START_YEAR, LiabilityEstimateTable, artificial_liability, calibrate_from_table,
                        load_synthetic_table)
from .exceptions import ConfigError, LQGTrackError
from .model import (LiabilityParams, MarketParams, Objective, TimeFunction, check_dimensions, cholesky_lower)
from .riccati import DEFAULT_STEP, TERMINAL_SCALE
from .simulate import SimConfig

SECTIONS = ("market", "liability", "objective", "solver", "simulation", "output")
BUNDLED = {"artificial": "artificial.ini", "empirical": "empirical.ini"}


@dataclass(frozen=True)
class SolverSettings:
    step: float = DEFAULT_STEP
    padding_horizon: Optional[float] = None
    terminal: str = "consistent"


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    liability: LiabilityParams
    objective: Objective
    solver: SolverSettings
    sim: SimConfig
    x0: float
    x0_rule: str
    out_dir: Path
    raw: dict = field(default_factory=dict)
    asset_names: Optional[tuple] = None


def _parse_value(text: str) -> Any:
    text = text.strip()
    if text.lower() == "none":
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _time_function(value, where: str) -> TimeFunction:
    try:
        if isinstance(value, dict):
            return TimeFunction(value["values"], times=value["times"], kind=value.get("kind", "linear"))
        return TimeFunction(value)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: cannot read time function ({exc})") from exc


class _Section:
    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = items

    def get(self, key: str, default=...):
        if key in self.items:
            return self.items[key]
        if default is ...:
            raise ConfigError(f"[{self.name}] missing required key '{key}'")
        return default

    def number(self, key: str, default=...) -> float:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{self.name}] {key} must be a number, got {value!r}")
        return float(value)


def read_sections(path) -> dict:
    path = resolve_config_path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    return {name: {k: _parse_value(v) for k, v in parser.items(name)} for name in parser.sections()}


def resolve_config_path(path) -> Path:
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        return Path(str(resources.files("lqgtrack.configs").joinpath(BUNDLED[str(path)])))
    return p


def _section(raw: dict, name: str) -> _Section:
    if name not in raw:
        raise ConfigError(f"missing [{name}] block")
    return _Section(name, raw[name])


def _build_market(sec: _Section, m: int) -> MarketParams:
    r = _time_function(sec.get("r", 0.0), "[market] r")
    b = _time_function(sec.get("b"), "[market] b")
    n = b.shape[0] if len(b.shape) == 1 else 0
    if n == 0:
        raise ConfigError("[market] b must be a list of drifts")
    d = int(sec.number("d", n + m))
    if "covariance" in sec.items:
        L = cholesky_lower(sec.get("covariance"))
        if L.shape != (n, n):
            raise ConfigError(f"[market] covariance must be {n} x {n}")
        factor = sec.get("factor", "lower")
        if factor == "upper":
            L = L.T
        elif factor != "lower":
            raise ConfigError("[market] factor must be 'lower' or 'upper'")
        if d < n:
            raise ConfigError(f"[market] d={d} is smaller than the asset count {n}")
        sigma = TimeFunction(np.hstack([L, np.zeros((n, d - n))]))
    elif "sigma_s" in sec.items:
        sigma = _time_function(sec.get("sigma_s"), "[market] sigma_s")
        if len(sigma.shape) != 2 or sigma.shape[0] != n:
            raise ConfigError(f"[market] sigma_s must be {n} x d")
        if sigma.shape[1] < d:
            vals = np.asarray(sigma.values)
            vals = np.pad(vals, [(0, 0)] * (vals.ndim - 1) + [(0, d - sigma.shape[1])])
            sigma = TimeFunction(vals, times=sigma.times, kind=sigma.kind)
    else:
        raise ConfigError("[market] needs a covariance or sigma_s block")
    return MarketParams(r=r, b=b, sigma_S=sigma, s0_riskfree=sec.number("s0_riskfree", 1.0),
                        s0=sec.get("s0", None))


def _build_liability(sec: _Section, base_dir: Path, horizon: float) -> LiabilityParams:
    kind = sec.get("kind")
    if kind == "artificial":
        return artificial_liability(sec.number("growth_rate", 0.01), sec.number("c0", 80.0), sec.number("b0", 100.0))
    if kind == "table":
        source = sec.get("table", "synthetic")
        if source == "synthetic":
            table = load_synthetic_table()
        else:
            path = Path(source)
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"[liability] table file {path} does not exist")
            table = LiabilityEstimateTable.from_csv(path)
        return calibrate_from_table(table, sec.number("start_year", DEFAULT_START_YEAR), horizon,
                                    sec.get("scheme", "central"))
    if kind == "custom":
        sigma_y = sec.get("sigma_y", None)
        return LiabilityParams(
            alpha=_time_function(sec.get("alpha"), "[liability] alpha"),
            h=_time_function(sec.get("h"), "[liability] h"),
            y0=sec.get("y0"),
            sigma_Y=None if sigma_y is None else _time_function(sigma_y, "[liability] sigma_y"),
        )
    raise ConfigError(f"[liability] kind must be artificial, table or custom, got {kind!r}")


def build_config(raw: dict, base_dir: Path = Path("."), overrides: Optional[dict] = None) -> RunConfig:
    """Validate every block and assemble model objects; no computation happens here."""
    raw = {name: dict(items) for name, items in raw.items()}
    for (name, key), value in (overrides or {}).items():
        if value is not None:
            raw.setdefault(name, {})[key] = value

    obj = _section(raw, "objective")
    objective = Objective(obj.number("gamma1"), obj.number("gamma2"), _time_function(obj.get("a"), "[objective] a"),
                          obj.get("A"), obj.number("T"))
    liability = _build_liability(_section(raw, "liability"), base_dir, objective.T)
    market = _build_market(_section(raw, "market"), liability.m)
    check_dimensions(market, liability, objective)

    sol = _Section("solver", raw.get("solver", {}))
    padding = sol.get("padding_horizon", None)
    terminal = sol.get("terminal", "consistent")
    if terminal not in TERMINAL_SCALE:
        raise ConfigError(f"[solver] terminal must be one of {sorted(TERMINAL_SCALE)}")
    solver = SolverSettings(step=sol.number("step", DEFAULT_STEP),
                            padding_horizon=None if padding is None else float(padding), terminal=terminal)
    if solver.padding_horizon is not None and solver.padding_horizon < objective.T:
        raise ConfigError("[solver] padding_horizon must be at least objective T")

    simsec = _Section("simulation", raw.get("simulation", {}))
    sim = SimConfig(int(simsec.number("paths", 1000)), simsec.number("dt", 0.25),
                    int(simsec.number("seed", 0)), objective.T)
    rule = simsec.get("x0", "match-benchmark")
    if rule == "match-benchmark":
        x0 = float(objective.a(0.0) @ liability.y0)
    elif isinstance(rule, (int, float)) and not isinstance(rule, bool):
        x0 = float(rule)
    else:
        raise ConfigError(f"[simulation] x0 must be a number or 'match-benchmark', got {rule!r}")

    out = _Section("output", raw.get("output", {}))
    names = raw.get("market", {}).get("names")
    return RunConfig(market, liability, objective, solver, sim, x0, str(rule), Path(out.get("dir", "out")), raw,
                     tuple(names) if names else None)


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    resolved = resolve_config_path(path)
    try:
        return build_config(read_sections(resolved), resolved.parent, overrides)
    except LQGTrackError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
