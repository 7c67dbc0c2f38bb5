"""Liability models for the artificial and the table-driven experiments."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import ConfigError, CoverageError, InsufficientData
from .model import LiabilityParams, TimeFunction

DEFAULT_START_YEAR = 2040
SYNTHETIC_TABLE = "synthetic_pension_estimates.csv"


@dataclass(frozen=True)
class LiabilityEstimateTable:
    """Annual (or irregular) estimates of income ``C`` and expense ``B`` in trillion yen."""

    years: np.ndarray
    income: np.ndarray
    expense: np.ndarray

    def __post_init__(self):
        years = np.array(self.years, dtype=float).reshape(-1)
        income = np.array(self.income, dtype=float).reshape(-1)
        expense = np.array(self.expense, dtype=float).reshape(-1)
        if not (years.size == income.size == expense.size):
            raise ConfigError("years, income and expense must have equal length")
        if years.size < 2:
            raise InsufficientData("an estimate table needs at least two rows")
        if np.any(np.diff(years) <= 0):
            raise ConfigError("table years must be strictly increasing")
        if not (np.all(np.isfinite(income)) and np.all(np.isfinite(expense)) and np.all(np.isfinite(years))):
            raise ConfigError("table values must be finite")
        for name, arr in (("years", years), ("income", income), ("expense", expense)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_csv(cls, path) -> "LiabilityEstimateTable":
        """Read a ``year,income,expense`` CSV (comma-separated, UTF-8, header row)."""
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._from_rows(csv.DictReader(fh), str(path))

    @classmethod
    def _from_rows(cls, reader, source: str) -> "LiabilityEstimateTable":
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["year", "income", "expense"]:
            raise ConfigError(f"{source}: header must be 'year,income,expense'")
        rows = [(float(r["year"]), float(r["income"]), float(r["expense"])) for r in reader]
        if not rows:
            raise InsufficientData(f"{source}: no data rows")
        years, income, expense = map(np.array, zip(*rows))
        return cls(years, income, expense)

    @property
    def values(self) -> np.ndarray:
        """Rows of ``(C, B)``."""
        return np.column_stack([self.income, self.expense])


def load_synthetic_table() -> LiabilityEstimateTable:
    """Bundled synthetic income/expense table whose shortfall widens after 2040."""
    with resources.files("lqgtrack.data").joinpath(SYNTHETIC_TABLE).open("r", encoding="utf-8", newline="") as fh:
        return LiabilityEstimateTable._from_rows(csv.DictReader(fh), SYNTHETIC_TABLE)


def artificial_liability(growth_rate: float = 0.01, c0: float = 80.0, b0: float = 100.0) -> LiabilityParams:
    """Income and expense growing deterministically at ``growth_rate``."""
    return LiabilityParams(alpha=float(growth_rate) * np.eye(2), h=np.zeros(2), y0=[c0, b0])


def _central_differences(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (x[2:, None] - x[:-2, None])
    out[0] = (v[1] - v[0]) / (x[1] - x[0])
    out[-1] = (v[-1] - v[-2]) / (x[-1] - x[-2])
    return out


def calibrate_from_table(table: LiabilityEstimateTable, start_year: float = DEFAULT_START_YEAR,
                         horizon: float | None = None, scheme: str = "central") -> LiabilityParams:
    """Deterministic liability whose drift ``h(t)`` differentiates the table numerically.

    ``scheme="central"`` uses central differences at interior knots and
    one-sided ones at the ends, interpolated linearly in time.
    ``scheme="forward"`` holds each interval's secant slope constant, so an
    Euler grid that hits every knot reproduces the table exactly.
    Calendar year ``start_year`` maps to ``t = 0``.
    """
    years = np.asarray(table.years)
    if not years[0] <= start_year <= years[-1]:
        raise CoverageError(f"start year {start_year} outside table range [{years[0]}, {years[-1]}]")
    if horizon is not None and start_year + horizon > years[-1] + 1e-9:
        raise CoverageError(f"table ends in {years[-1]:g}, before {start_year + horizon:g}")
    window_end = years[-1] if horizon is None else start_year + horizon
    in_window = np.count_nonzero((years >= start_year - 1e-9) & (years <= window_end + 1e-9))
    if in_window < 2 and horizon is not None:
        raise InsufficientData("fewer than two table rows fall inside the horizon")

    values = table.values
    if scheme == "central":
        h = TimeFunction(_central_differences(years, values), times=years - start_year)
    elif scheme == "forward":
        slopes = np.diff(values, axis=0) / np.diff(years)[:, None]
        h = TimeFunction(np.vstack([slopes, slopes[-1:]]), times=years - start_year, kind="previous")
    else:
        raise ConfigError(f"unknown differentiation scheme {scheme!r}")
    y0 = np.array([np.interp(start_year, years, values[:, j]) for j in range(2)])
    return LiabilityParams(alpha=np.zeros((2, 2)), h=h, y0=y0)
