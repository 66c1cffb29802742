"""Momentum and liquidity features plus cross-sectional rank normalization.

Four features per stock per rebalance date: a 14-day relative strength
index, the smoothed stochastic oscillator (%D over a 21-day window), the
21/42-day simple moving-average crossover ratio, and 21-day average
dollar volume. Raw values are kept for diagnostics; the classifier only
ever sees the cross-sectional ranks (1 = highest value).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Dict, List, Mapping, Sequence, Tuple

from .exceptions import (
    DataValidationError,
    DegenerateRangeError,
    EngineError,
    InsufficientHistoryError,
)
from .market_data import Bar, PriceSeries, format_price

logger = logging.getLogger(__name__)

RSI_PERIOD = 14
STOCH_K_PERIOD = 21
STOCH_D_PERIOD = 3
MA_SHORT = 21
MA_LONG = 42
ADV_WINDOW = 21

# Rank-feature order fed to the classifier; also the model arity.
FEATURE_NAMES = ("rsi", "stoch_d", "ma_crossover", "adv")

# Longest bar window any feature needs (MA crossover's long leg).
WARMUP_BARS = max(RSI_PERIOD + 1, STOCH_K_PERIOD + STOCH_D_PERIOD - 1, MA_LONG, ADV_WINDOW)


def rsi(closes: Sequence[float], period: int = RSI_PERIOD) -> float:
    """Relative strength index over the trailing `period` close-to-close changes.

    Average gain and loss are simple means over the window (sum of
    gains / period). Zero average loss maps to 100, zero average gain to
    0; a completely flat window (both zero) is scored neutral at 50.
    """
    if len(closes) < period + 1:
        raise InsufficientHistoryError(
            f"rsi needs {period + 1} closes, got {len(closes)}"
        )
    window = closes[-(period + 1):]
    gains = 0.0
    losses = 0.0
    for prev, cur in zip(window, window[1:]):
        change = cur - prev
        if change > 0:
            gains += change
        else:
            losses -= change
    avg_gain = gains / period
    avg_loss = losses / period
    if avg_gain == 0.0 and avg_loss == 0.0:
        return 50.0
    if avg_loss == 0.0:
        return 100.0
    if avg_gain == 0.0:
        return 0.0
    rs = avg_gain / avg_loss
    return 100.0 - 100.0 / (1.0 + rs)


def _percent_k(bars: Sequence[Bar]) -> float:
    """%k of the last bar against the high/low range of `bars` (0-100 scale)."""
    highest = max(b.high for b in bars)
    lowest = min(b.low for b in bars)
    if highest == lowest:
        raise DegenerateRangeError(
            f"flat high/low range over window ending {bars[-1].date}"
        )
    return 100.0 * (bars[-1].close - lowest) / (highest - lowest)


def stochastic(
    bars: Sequence[Bar],
    k_period: int = STOCH_K_PERIOD,
    d_period: int = STOCH_D_PERIOD,
) -> Tuple[float, float]:
    """(%k, %D) of the latest bar; %D is the mean of the last `d_period` %k values.

    Each %k looks back over its own `k_period` bars, so
    k_period + d_period - 1 bars are required. A window whose high equals
    its low carries no information and raises DegenerateRangeError; the
    caller drops the symbol for that date.
    """
    needed = k_period + d_period - 1
    if len(bars) < needed:
        raise InsufficientHistoryError(
            f"stochastic needs {needed} bars, got {len(bars)}"
        )
    ks = []
    for offset in range(d_period):
        end = len(bars) - offset
        ks.append(_percent_k(bars[end - k_period : end]))
    ks.reverse()
    return ks[-1], sum(ks) / d_period


def ma_crossover(
    closes: Sequence[float], short: int = MA_SHORT, long: int = MA_LONG
) -> float:
    """Short simple moving average divided by the long one (trailing windows)."""
    if len(closes) < long:
        raise InsufficientHistoryError(
            f"ma_crossover needs {long} closes, got {len(closes)}"
        )
    short_sma = sum(closes[-short:]) / short
    long_sma = sum(closes[-long:]) / long
    if long_sma == 0:
        raise EngineError("zero long moving average")
    return short_sma / long_sma


def avg_dollar_volume(bars: Sequence[Bar], window: int = ADV_WINDOW) -> float:
    """Mean traded volume over `window` bars times the latest close."""
    if len(bars) < window:
        raise InsufficientHistoryError(
            f"avg_dollar_volume needs {window} bars, got {len(bars)}"
        )
    tail = bars[-window:]
    mean_volume = sum(b.volume for b in tail) / window
    return mean_volume * tail[-1].close


def cross_sectional_rank(values: Mapping[str, float]) -> Dict[str, int]:
    """Rank symbols by value: 1 for the highest, N for the lowest.

    Ties break by ascending symbol so reruns are bit-identical.
    """
    if not values:
        raise EngineError("cannot rank an empty cross-section")
    for symbol, value in values.items():
        if not math.isfinite(value):
            raise DataValidationError(f"{symbol}: non-finite value {value}")
    ordered = sorted(values, key=lambda s: (-values[s], s))
    return {symbol: rank for rank, symbol in enumerate(ordered, start=1)}


@dataclass(frozen=True)
class FeatureVector:
    """Raw feature values for one symbol on one date."""

    symbol: str
    rsi: float
    stoch_d: float
    ma_crossover: float
    avg_dollar_volume: float


@dataclass
class FeatureMatrix:
    """Cross-section of features for one rebalance date plus per-feature ranks."""

    as_of: Date
    rows: List[FeatureVector]
    ranks: Dict[str, Dict[str, int]]  # feature name -> symbol -> rank

    @property
    def symbols(self) -> List[str]:
        return [row.symbol for row in self.rows]

    def rank_vector(self, symbol: str) -> Tuple[float, ...]:
        """Rank features for `symbol` in FEATURE_NAMES order (classifier input)."""
        return tuple(float(self.ranks[name][symbol]) for name in FEATURE_NAMES)


def compute_features(
    data: Mapping[str, PriceSeries],
    symbols: Sequence[str],
    as_of: Date,
) -> FeatureMatrix:
    """Feature matrix for every symbol with enough history on `as_of`.

    Symbols lacking a bar on the date, lacking warm-up history, or with a
    degenerate stochastic window are excluded (logged at debug level), not
    imputed.
    """
    rows: List[FeatureVector] = []
    for symbol in sorted(symbols):
        series = data.get(symbol)
        if series is None or not series.has_date(as_of):
            continue
        try:
            bars = series.window_ending_at(as_of, WARMUP_BARS)
        except InsufficientHistoryError:
            continue
        closes = [b.close for b in bars]
        try:
            _, stoch_d = stochastic(bars)
        except DegenerateRangeError:
            logger.debug("%s %s: degenerate stochastic range, excluded", symbol, as_of)
            continue
        rows.append(
            FeatureVector(
                symbol=symbol,
                rsi=rsi(closes),
                stoch_d=stoch_d,
                ma_crossover=ma_crossover(closes),
                avg_dollar_volume=avg_dollar_volume(bars),
            )
        )
    ranks = {
        "rsi": cross_sectional_rank({r.symbol: r.rsi for r in rows}) if rows else {},
        "stoch_d": cross_sectional_rank({r.symbol: r.stoch_d for r in rows}) if rows else {},
        "ma_crossover": cross_sectional_rank({r.symbol: r.ma_crossover for r in rows}) if rows else {},
        "adv": cross_sectional_rank({r.symbol: r.avg_dollar_volume for r in rows}) if rows else {},
    }
    return FeatureMatrix(as_of=as_of, rows=rows, ranks=ranks)


def write_feature_csv(path, matrix: FeatureMatrix) -> None:
    """Export `symbol,rsi,stoch_d,ma_crossover,adv,rank_rsi,rank_stoch_d,rank_mac,rank_adv`."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "symbol",
                "rsi",
                "stoch_d",
                "ma_crossover",
                "adv",
                "rank_rsi",
                "rank_stoch_d",
                "rank_mac",
                "rank_adv",
            ]
        )
        for row in matrix.rows:
            writer.writerow(
                [
                    row.symbol,
                    format_price(row.rsi),
                    format_price(row.stoch_d),
                    format_price(row.ma_crossover),
                    format_price(row.avg_dollar_volume),
                    matrix.ranks["rsi"][row.symbol],
                    matrix.ranks["stoch_d"][row.symbol],
                    matrix.ranks["ma_crossover"][row.symbol],
                    matrix.ranks["adv"][row.symbol],
                ]
            )
