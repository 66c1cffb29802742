"""OHLCV ingestion, trading-calendar alignment, and return series.

Everything downstream (indicators, betas, the rebalance loop) reads
daily bars through the types defined here. Input is a single CSV with
header ``date,symbol,open,high,low,close,volume``; rows may arrive in
any order and are sorted per symbol. Missing days are never filled in:
a symbol that lacks history for a lookback is simply excluded from that
rebalance by the callers.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from typing import Dict, Iterable, List, Sequence, Tuple

from .exceptions import (
    DataValidationError,
    EngineError,
    InsufficientHistoryError,
    ParseError,
)

logger = logging.getLogger(__name__)

CSV_HEADER = ["date", "symbol", "open", "high", "low", "close", "volume"]


@dataclass(frozen=True)
class Bar:
    """One daily OHLCV observation. Prices in currency units, volume in shares."""

    date: Date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def validate(self, symbol: str = "?") -> None:
        if min(self.open, self.high, self.low, self.close) <= 0:
            raise DataValidationError(
                f"{symbol} {self.date}: non-positive price"
            )
        if self.volume < 0:
            raise DataValidationError(
                f"{symbol} {self.date}: negative volume {self.volume}"
            )
        if not (self.low <= self.open <= self.high):
            raise DataValidationError(
                f"{symbol} {self.date}: open {self.open} outside [low, high]"
            )
        if not (self.low <= self.close <= self.high):
            raise DataValidationError(
                f"{symbol} {self.date}: close {self.close} outside [low, high]"
            )


@dataclass
class PriceSeries:
    """Date-ordered bars for a single symbol.

    Dates are strictly increasing; duplicates are rejected at
    construction. Bars need not cover every calendar date.
    """

    symbol: str
    bars: List[Bar]
    _index: Dict[Date, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise DataValidationError(
                    f"{self.symbol}: dates not strictly increasing at {cur.date}"
                )
        self._index = {bar.date: i for i, bar in enumerate(self.bars)}

    def __len__(self) -> int:
        return len(self.bars)

    def dates(self) -> List[Date]:
        return [bar.date for bar in self.bars]

    def closes(self) -> List[float]:
        return [bar.close for bar in self.bars]

    def has_date(self, date: Date) -> bool:
        return date in self._index

    def index_of(self, date: Date) -> int:
        """Position of `date` in the series; KeyError if absent."""
        return self._index[date]

    def bar_at(self, date: Date) -> Bar:
        return self.bars[self._index[date]]

    def close_at(self, date: Date) -> float:
        return self.bars[self._index[date]].close

    def last_close_on_or_before(self, date: Date) -> float | None:
        """Most recent close at or before `date`; None if series starts later.

        Used for marking positions on days where the symbol did not print.
        """
        lo, hi = 0, len(self.bars) - 1
        best = -1
        while lo <= hi:
            mid = (lo + hi) // 2
            if self.bars[mid].date <= date:
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        return self.bars[best].close if best >= 0 else None

    def window_ending_at(self, date: Date, length: int) -> List[Bar]:
        """The `length` bars ending at (and including) `date`.

        Raises InsufficientHistoryError when the series is too short and
        KeyError when the symbol has no bar on `date`.
        """
        end = self._index[date]
        if end + 1 < length:
            raise InsufficientHistoryError(
                f"{self.symbol}: need {length} bars ending {date}, have {end + 1}"
            )
        return self.bars[end + 1 - length : end + 1]


@dataclass(frozen=True)
class Universe:
    """Tradable symbols plus the benchmark ticker they are measured against."""

    symbols: frozenset
    benchmark: str

    def __post_init__(self) -> None:
        if not self.symbols:
            raise DataValidationError("universe has no symbols")
        if self.benchmark in self.symbols:
            raise DataValidationError(
                f"benchmark {self.benchmark} must not be a universe member"
            )


class TradingCalendar:
    """Ordered trading dates with the first trading day of each month marked."""

    def __init__(self, dates: Sequence[Date]):
        dates = list(dates)
        for prev, cur in zip(dates, dates[1:]):
            if cur <= prev:
                raise DataValidationError(
                    f"calendar dates not strictly increasing at {cur}"
                )
        self.dates: List[Date] = dates
        self._date_set = set(dates)
        self.month_starts: List[int] = [
            i
            for i, d in enumerate(dates)
            if i == 0 or (d.year, d.month) != (dates[i - 1].year, dates[i - 1].month)
        ]

    def __len__(self) -> int:
        return len(self.dates)

    def __contains__(self, date: Date) -> bool:
        return date in self._date_set

    def month_start_dates(self) -> List[Date]:
        return [self.dates[i] for i in self.month_starts]

    def month_of(self, date: Date) -> Tuple[int, int]:
        return (date.year, date.month)


def _parse_row(row: List[str], line: int) -> Tuple[str, Bar]:
    if len(row) != 7:
        raise ParseError(f"expected 7 fields, got {len(row)}", line)
    raw_date, symbol, o, h, lo, c, v = row
    try:
        parsed = Bar(
            date=datetime.strptime(raw_date, "%Y-%m-%d").date(),
            open=float(o),
            high=float(h),
            low=float(lo),
            close=float(c),
            volume=float(v),
        )
    except ValueError as exc:
        raise ParseError(str(exc), line) from exc
    if not symbol:
        raise ParseError("empty symbol", line)
    return symbol, parsed


def load_ohlcv_csv(path, calendar: TradingCalendar) -> Dict[str, PriceSeries]:
    """Load an OHLCV CSV into one PriceSeries per symbol.

    Rows with dates outside `calendar` are dropped. Gaps (calendar dates
    between a symbol's first and last bar with no row) are logged, never
    filled. Malformed rows raise ParseError with the offending line
    number; bar-invariant violations raise DataValidationError naming the
    symbol and date.
    """
    rows_by_symbol: Dict[str, List[Bar]] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1)
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"bad header {header!r}", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            symbol, bar = _parse_row(row, line)
            bar.validate(symbol)
            if bar.date not in calendar:
                continue
            rows_by_symbol.setdefault(symbol, []).append(bar)

    result: Dict[str, PriceSeries] = {}
    for symbol, bars in rows_by_symbol.items():
        bars.sort(key=lambda b: b.date)
        series = PriceSeries(symbol=symbol, bars=bars)
        gaps = find_gaps(series, calendar)
        if gaps:
            logger.warning("%s: %d missing calendar dates (not filled)", symbol, len(gaps))
        result[symbol] = series
    return result


def save_ohlcv_csv(path, series_by_symbol: Dict[str, PriceSeries]) -> None:
    """Write series back out in the input format (symbols sorted, dates ascending)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for symbol in sorted(series_by_symbol):
            for bar in series_by_symbol[symbol].bars:
                writer.writerow(
                    [
                        bar.date.isoformat(),
                        symbol,
                        format_price(bar.open),
                        format_price(bar.high),
                        format_price(bar.low),
                        format_price(bar.close),
                        format_volume(bar.volume),
                    ]
                )


def format_price(value: float) -> str:
    """Stable decimal formatting used by every CSV writer (determinism)."""
    return f"{value:.6f}"


def format_volume(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.2f}"


def find_gaps(series: PriceSeries, calendar: TradingCalendar) -> List[Date]:
    """Calendar dates between the series' first and last bar with no row."""
    if not series.bars:
        return []
    first, last = series.bars[0].date, series.bars[-1].date
    present = series._index
    return [d for d in calendar.dates if first < d < last and d not in present]


def calendar_from_csv(path, benchmark: str) -> TradingCalendar:
    """Build the trading calendar from the benchmark's rows in a CSV file.

    The benchmark defines which days count as trading days; other
    symbols are aligned to it on load.
    """
    dates = set()
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1)
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"bad header {header!r}", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise ParseError(f"expected 7 fields, got {len(row)}", line)
            if row[1] == benchmark:
                try:
                    dates.add(datetime.strptime(row[0], "%Y-%m-%d").date())
                except ValueError as exc:
                    raise ParseError(str(exc), line) from exc
    if not dates:
        raise EngineError(f"benchmark {benchmark} has no rows in {path}")
    return TradingCalendar(sorted(dates))


def simple_returns(series: PriceSeries) -> List[float]:
    """Daily close-to-close returns: r[t] = close[t]/close[t-1] - 1."""
    closes = series.closes()
    if len(closes) < 2:
        raise InsufficientHistoryError(
            f"{series.symbol}: need at least 2 closes, have {len(closes)}"
        )
    return returns_from_closes(closes)


def returns_from_closes(closes: Sequence[float]) -> List[float]:
    out = []
    for prev, cur in zip(closes, closes[1:]):
        if prev == 0:
            raise EngineError("zero close makes the return undefined")
        out.append(cur / prev - 1.0)
    return out


def monthly_range(series: PriceSeries, month: Tuple[int, int]) -> float:
    """(max high - min low) / mean close over one calendar month.

    Returns the raw fraction; callers compare it against the instability
    threshold (default 0.17). The log transform sometimes used for
    plotting the distribution is presentation-only.
    """
    year, mon = month
    bars = [b for b in series.bars if (b.date.year, b.date.month) == (year, mon)]
    if not bars:
        raise InsufficientHistoryError(
            f"{series.symbol}: no bars in {year:04d}-{mon:02d}"
        )
    high = max(b.high for b in bars)
    low = min(b.low for b in bars)
    mean_close = sum(b.close for b in bars) / len(bars)
    return (high - low) / mean_close


def months_between(first: Date, last: Date) -> List[Tuple[int, int]]:
    """All (year, month) pairs from first's month through last's month."""
    months = []
    y, m = first.year, first.month
    while (y, m) <= (last.year, last.month):
        months.append((y, m))
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return months
