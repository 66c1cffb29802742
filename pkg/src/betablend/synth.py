"""Deterministic synthetic OHLCV fixtures.

Real constituent-level data over a long window is not redistributable,
so tests and examples run on generated panels instead. Each symbol's
daily return is

    r[i, t] = mu[i, month(t)] + beta[i] * f[t] + idio_vol * eps[i, t]

where `f` is a common market factor (the benchmark's own return),
betas are evenly spaced over a configurable band so beta estimation
has real dispersion to find, and the per-month drift follows an AR(1)

    mu[i, m+1] = persistence * mu[i, m] + sqrt(1 - persistence^2) * xi

so that with persistence > 0 last month's winners tend to keep
winning, giving the momentum features genuine predictive content.
Persistence 0 makes months independent. Everything is driven by one
seeded generator, so equal configs produce byte-identical files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date as Date
from datetime import timedelta
from typing import Dict, List

import numpy as np

from .exceptions import ConfigError
from .market_data import Bar, PriceSeries, TradingCalendar, save_ohlcv_csv

logger = logging.getLogger(__name__)

RETURN_FLOOR = -0.95


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters; defaults give a mild, momentum-bearing panel."""

    n_symbols: int = 50
    n_days: int = 504
    start: Date = Date(2020, 1, 1)
    seed: int = 0
    benchmark: str = "BENCH"
    market_vol: float = 0.008
    market_drift: float = 0.0002
    idio_vol: float = 0.012
    drift_scale: float = 0.003
    persistence: float = 0.85
    beta_low: float = 0.2
    beta_high: float = 1.8
    gap_fraction: float = 0.0

    def validate(self) -> None:
        if self.n_symbols < 1:
            raise ConfigError("n_symbols must be >= 1")
        if self.n_days < 2:
            raise ConfigError("n_days must be >= 2")
        if self.market_vol < 0 or self.idio_vol < 0 or self.drift_scale < 0:
            raise ConfigError("volatilities and drift_scale must be >= 0")
        if not 0.0 <= self.persistence <= 1.0:
            raise ConfigError(
                f"persistence must be in [0, 1], got {self.persistence}"
            )
        if self.beta_low > self.beta_high:
            raise ConfigError("beta_low must not exceed beta_high")
        if not 0.0 <= self.gap_fraction < 1.0:
            raise ConfigError("gap_fraction must be in [0, 1)")
        if not self.benchmark:
            raise ConfigError("benchmark symbol must be non-empty")


def weekday_calendar(start: Date, n_days: int) -> TradingCalendar:
    """The first `n_days` Monday-to-Friday dates starting at `start`."""
    dates: List[Date] = []
    day = start
    while len(dates) < n_days:
        if day.weekday() < 5:
            dates.append(day)
        day += timedelta(days=1)
    return TradingCalendar(dates)


def symbol_names(n_symbols: int) -> List[str]:
    width = max(3, len(str(n_symbols)))
    return [f"S{i:0{width}d}" for i in range(1, n_symbols + 1)]


def _betas(config: SynthConfig) -> List[float]:
    if config.n_symbols == 1:
        return [(config.beta_low + config.beta_high) / 2.0]
    step = (config.beta_high - config.beta_low) / (config.n_symbols - 1)
    return [config.beta_low + i * step for i in range(config.n_symbols)]


def _month_ordinals(calendar: TradingCalendar) -> List[int]:
    """Ordinal month id per trading day (0 for the first month, then 1, ...)."""
    ordinals: List[int] = []
    seen: Dict[tuple, int] = {}
    for d in calendar.dates:
        key = (d.year, d.month)
        if key not in seen:
            seen[key] = len(seen)
        ordinals.append(seen[key])
    return ordinals


def _bars_from_returns(
    dates: List[Date],
    returns: np.ndarray,
    base_price: float,
    wick_up: np.ndarray,
    wick_down: np.ndarray,
    volumes: np.ndarray,
) -> List[Bar]:
    growth = np.maximum(1.0 + returns, 1.0 + RETURN_FLOOR)
    closes = base_price * np.cumprod(growth)
    opens = np.concatenate(([base_price], closes[:-1]))
    highs = np.maximum(opens, closes) * (1.0 + wick_up)
    lows = np.minimum(opens, closes) * (1.0 - wick_down)
    bars = []
    for i, d in enumerate(dates):
        bar = Bar(
            date=d,
            open=float(opens[i]),
            high=float(highs[i]),
            low=float(lows[i]),
            close=float(closes[i]),
            volume=float(int(volumes[i])),
        )
        bars.append(bar)
    return bars


def generate_market_data(config: SynthConfig) -> Dict[str, PriceSeries]:
    """Full synthetic panel keyed by symbol, benchmark included.

    Draw order is fixed (market path, benchmark dressing, then each
    symbol in name order), so output depends only on the config.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    calendar = weekday_calendar(config.start, config.n_days)
    dates = calendar.dates
    month_ids = np.asarray(_month_ordinals(calendar))
    n_months = int(month_ids[-1]) + 1

    market_returns = config.market_drift + config.market_vol * rng.standard_normal(
        config.n_days
    )

    series: Dict[str, PriceSeries] = {}
    bench_wick_up = rng.uniform(0.0, config.market_vol, config.n_days)
    bench_wick_down = rng.uniform(0.0, config.market_vol, config.n_days)
    bench_volumes = np.exp(rng.normal(0.0, 0.2, config.n_days)) * 1_000_000
    series[config.benchmark] = PriceSeries(
        symbol=config.benchmark,
        bars=_bars_from_returns(
            dates, market_returns, 100.0, bench_wick_up, bench_wick_down, bench_volumes
        ),
    )

    names = symbol_names(config.n_symbols)
    betas = _betas(config)
    for name, beta in zip(names, betas):
        drifts = np.empty(n_months)
        drifts[0] = config.drift_scale * rng.standard_normal()
        innovation_scale = config.drift_scale * np.sqrt(
            1.0 - config.persistence**2
        )
        for m in range(1, n_months):
            drifts[m] = (
                config.persistence * drifts[m - 1]
                + innovation_scale * rng.standard_normal()
            )
        idio = config.idio_vol * rng.standard_normal(config.n_days)
        returns = drifts[month_ids] + beta * market_returns + idio
        wick_up = rng.uniform(0.0, config.idio_vol, config.n_days)
        wick_down = rng.uniform(0.0, config.idio_vol, config.n_days)
        base_price = float(rng.uniform(20.0, 200.0))
        base_volume = float(rng.uniform(2e5, 5e6))
        volumes = np.exp(rng.normal(0.0, 0.3, config.n_days)) * base_volume
        bars = _bars_from_returns(
            dates, returns, base_price, wick_up, wick_down, volumes
        )
        if config.gap_fraction > 0.0:
            keep = rng.uniform(size=config.n_days) >= config.gap_fraction
            bars = [bar for bar, k in zip(bars, keep) if k]
        if not bars:
            logger.warning("%s: every bar dropped by gap_fraction; skipped", name)
            continue
        series[name] = PriceSeries(symbol=name, bars=bars)
    return series


def write_fixture(config: SynthConfig, path) -> Dict[str, PriceSeries]:
    """Generate and save a panel; returns the in-memory series."""
    series = generate_market_data(config)
    save_ohlcv_csv(path, series)
    logger.info(
        "wrote %d symbols x %d days to %s (seed %d)",
        config.n_symbols,
        config.n_days,
        path,
        config.seed,
    )
    return series
