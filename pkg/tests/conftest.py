"""Shared fixtures: scripted price panels and generated market data."""

from __future__ import annotations

from datetime import date as Date
from typing import Dict, List, Sequence

import pytest

from betablend.backtester import MarketData
from betablend.market_data import (
    Bar,
    PriceSeries,
    TradingCalendar,
    save_ohlcv_csv,
)
from betablend.synth import SynthConfig, generate_market_data


def series_from_closes(
    symbol: str,
    dates: Sequence[Date],
    closes: Sequence[float],
    volume: float = 10_000.0,
) -> PriceSeries:
    """Flat bars (open = high = low = close) for scripted scenarios."""
    assert len(dates) == len(closes)
    bars = [
        Bar(date=d, open=c, high=c, low=c, close=c, volume=volume)
        for d, c in zip(dates, closes)
    ]
    return PriceSeries(symbol=symbol, bars=bars)


def market_from_closes(
    dates: Sequence[Date],
    closes_by_symbol: Dict[str, List[float]],
    benchmark: str,
) -> MarketData:
    series = {
        symbol: series_from_closes(symbol, dates, closes)
        for symbol, closes in closes_by_symbol.items()
    }
    return MarketData(
        series=series, calendar=TradingCalendar(list(dates)), benchmark=benchmark
    )


# -- the scripted 3-symbol, 4-month ledger scenario -------------------------

LEDGER_DATES = [
    Date(2021, 1, 4), Date(2021, 1, 5), Date(2021, 1, 6), Date(2021, 1, 7),
    Date(2021, 1, 8),
    Date(2021, 2, 1), Date(2021, 2, 2), Date(2021, 2, 3), Date(2021, 2, 4),
    Date(2021, 2, 5),
    Date(2021, 3, 1), Date(2021, 3, 2), Date(2021, 3, 3), Date(2021, 3, 4),
    Date(2021, 3, 5),
    Date(2021, 4, 1), Date(2021, 4, 2), Date(2021, 4, 5), Date(2021, 4, 6),
    Date(2021, 4, 7),
]

LEDGER_CLOSES = {
    "AAA": [100.0, 101.0, 102.0, 103.0, 104.0,
            110.0, 111.0, 112.0, 111.0, 113.0,
            120.0, 119.0, 121.0, 122.0, 124.0,
            125.0, 126.0, 128.0, 127.0, 130.0],
    "BBB": [50.0, 49.5, 49.0, 48.5, 48.0,
            46.0, 45.5, 46.5, 45.0, 44.0,
            42.0, 42.5, 41.0, 40.5, 40.0,
            41.0, 41.5, 42.0, 43.0, 44.0],
    "CCC": [20.0, 20.2, 20.4, 20.6, 20.8,
            21.0, 21.4, 21.2, 21.6, 22.0,
            23.0, 22.8, 23.2, 23.4, 23.6,
            24.0, 24.2, 24.4, 24.8, 25.0],
    "BNCH": [1000.0, 1001.0, 1002.0, 1003.0, 1004.0,
             1010.0, 1011.0, 1012.0, 1013.0, 1014.0,
             1020.0, 1021.0, 1022.0, 1023.0, 1024.0,
             1030.0, 1031.0, 1032.0, 1033.0, 1034.0],
}


@pytest.fixture()
def ledger_market() -> MarketData:
    return market_from_closes(LEDGER_DATES, LEDGER_CLOSES, benchmark="BNCH")


# -- generated panels, one instance per session -----------------------------

MOMENTUM_PANEL = SynthConfig(
    n_symbols=100,
    n_days=756,
    start=Date(2019, 1, 1),
    seed=11,
    market_vol=0.007,
    market_drift=0.0003,
    idio_vol=0.010,
    drift_scale=0.0035,
    persistence=0.85,
)

QUIET_PANEL = SynthConfig(
    n_symbols=60,
    n_days=315,
    start=Date(2021, 1, 1),
    seed=5,
    market_vol=0.00017,
    market_drift=0.00002,
    idio_vol=0.00025,
    drift_scale=0.00007,
    persistence=0.8,
)


@pytest.fixture(scope="session")
def momentum_panel() -> MarketData:
    """100 symbols, 3 years, persistent monthly drift: momentum is learnable."""
    series = generate_market_data(MOMENTUM_PANEL)
    dates = series[MOMENTUM_PANEL.benchmark].dates()
    return MarketData(
        series=series, calendar=TradingCalendar(dates), benchmark="BENCH"
    )


@pytest.fixture(scope="session")
def quiet_panel() -> MarketData:
    """Low-volatility panel for tolerance-sensitive scaling checks."""
    series = generate_market_data(QUIET_PANEL)
    dates = series[QUIET_PANEL.benchmark].dates()
    return MarketData(
        series=series, calendar=TradingCalendar(dates), benchmark="BENCH"
    )


@pytest.fixture(scope="session")
def momentum_panel_csv(tmp_path_factory) -> str:
    """The momentum panel written to disk for CLI and service tests."""
    path = tmp_path_factory.mktemp("panel") / "data.csv"
    series = generate_market_data(MOMENTUM_PANEL)
    save_ohlcv_csv(path, series)
    return str(path)
