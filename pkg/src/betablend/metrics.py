"""Risk and profitability statistics over equity curves.

Conventions: 252 trading days per year, sample (N-1) standard
deviation, annual risk-free rate converted to daily by division by 252.
An undefined Sharpe (zero-variance returns) is reported as None with a
reason, never as 0 or infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exceptions import EngineError, UndefinedMetricError
from .portfolio import estimate_beta

TRADING_DAYS_PER_YEAR = 252


@dataclass
class EquityCurve:
    """Daily portfolio values on trading dates."""

    dates: List[Date]
    values: List[float]

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.values):
            raise EngineError("dates and values differ in length")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise EngineError(f"curve dates not strictly increasing at {cur}")

    def __len__(self) -> int:
        return len(self.values)

    def daily_returns(self) -> List[float]:
        out = []
        for prev, cur in zip(self.values, self.values[1:]):
            if prev == 0:
                raise EngineError("zero equity value makes returns undefined")
            out.append(cur / prev - 1.0)
        return out

    def restricted_to(self, dates: Sequence[Date]) -> "EquityCurve":
        wanted = set(dates)
        pairs = [(d, v) for d, v in zip(self.dates, self.values) if d in wanted]
        return EquityCurve(dates=[d for d, _ in pairs], values=[v for _, v in pairs])


@dataclass
class MetricsReport:
    """Everything the summary tables report, for one curve vs a benchmark."""

    total_return: float
    annualized_return: float
    sharpe: Optional[float]
    sharpe_reason: Optional[str]
    beta: float
    max_drawdown: float
    annual_volatility: float
    risk_free_rate: float
    n_days: int
    start: Date
    end: Date

    def to_dict(self) -> Dict[str, object]:
        return {
            "total_return": self.total_return,
            "annualized_return": self.annualized_return,
            "sharpe": self.sharpe,
            "sharpe_reason": self.sharpe_reason,
            "beta": self.beta,
            "max_drawdown": self.max_drawdown,
            "annual_volatility": self.annual_volatility,
            "risk_free_rate": self.risk_free_rate,
            "n_days": self.n_days,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
        }


def sharpe(daily_returns: Sequence[float], risk_free_annual: float = 0.0) -> float:
    """Annualized mean excess return over its sample standard deviation."""
    if len(daily_returns) < 2:
        raise EngineError("need at least 2 returns for a Sharpe ratio")
    excess = np.asarray(daily_returns, dtype=float) - risk_free_annual / TRADING_DAYS_PER_YEAR
    # np.std of a constant array can return ~1e-18 instead of 0; catch the
    # degenerate case exactly
    if np.all(excess == excess[0]):
        raise UndefinedMetricError("zero return standard deviation")
    std = float(np.std(excess, ddof=1))
    if std == 0:
        raise UndefinedMetricError("zero return standard deviation")
    return float(np.mean(excess)) / std * math.sqrt(TRADING_DAYS_PER_YEAR)


def portfolio_beta(
    portfolio_returns: Sequence[float], benchmark_returns: Sequence[float]
) -> float:
    """Full-run beta: covariance with the benchmark over its variance."""
    return estimate_beta(portfolio_returns, benchmark_returns)


def max_drawdown(equity: Sequence[float]) -> float:
    """Largest peak-to-trough fractional decline, single running-peak pass."""
    if len(equity) == 0:
        raise EngineError("empty equity sequence")
    peak = None
    worst = 0.0
    for value in equity:
        if value <= 0:
            raise EngineError(f"non-positive equity value {value}")
        if peak is None or value > peak:
            peak = value
        drawdown = (peak - value) / peak
        if drawdown > worst:
            worst = drawdown
    return worst


def annualized_volatility(daily_returns: Sequence[float]) -> float:
    """Sample standard deviation of daily returns, annualized."""
    if len(daily_returns) < 2:
        raise EngineError("need at least 2 returns for volatility")
    data = np.asarray(daily_returns, dtype=float)
    if np.all(data == data[0]):
        return 0.0
    return float(np.std(data, ddof=1)) * math.sqrt(TRADING_DAYS_PER_YEAR)


def build_report(
    curve: EquityCurve,
    benchmark: EquityCurve,
    risk_free_annual: float = 0.0,
) -> MetricsReport:
    """All metrics for `curve`, with beta measured against `benchmark`.

    Both curves are restricted to their common dates first; total return
    is final/initial over that intersection, and the annualized figure
    compounds it over 252-day years.
    """
    common = sorted(set(curve.dates) & set(benchmark.dates))
    if len(common) < 2:
        raise EngineError("curves overlap on fewer than 2 dates")
    mine = curve.restricted_to(common)
    bench = benchmark.restricted_to(common)

    returns = mine.daily_returns()
    bench_returns = bench.daily_returns()

    total_return = mine.values[-1] / mine.values[0] - 1.0
    years = len(returns) / TRADING_DAYS_PER_YEAR
    annualized = (1.0 + total_return) ** (1.0 / years) - 1.0 if years > 0 else 0.0

    sharpe_value: Optional[float]
    sharpe_reason: Optional[str]
    try:
        sharpe_value = sharpe(returns, risk_free_annual)
        sharpe_reason = None
    except UndefinedMetricError as exc:
        sharpe_value = None
        sharpe_reason = str(exc)

    return MetricsReport(
        total_return=total_return,
        annualized_return=annualized,
        sharpe=sharpe_value,
        sharpe_reason=sharpe_reason,
        beta=portfolio_beta(returns, bench_returns),
        max_drawdown=max_drawdown(mine.values),
        annual_volatility=annualized_volatility(returns),
        risk_free_rate=risk_free_annual,
        n_days=len(common),
        start=common[0],
        end=common[-1],
    )
