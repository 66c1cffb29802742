"""Ingestion, calendar alignment, and return-series behavior."""

from __future__ import annotations

from datetime import date as Date
from datetime import timedelta

import numpy as np
import pytest

from betablend.exceptions import (
    DataValidationError,
    EngineError,
    InsufficientHistoryError,
    ParseError,
)
from betablend.market_data import (
    Bar,
    PriceSeries,
    TradingCalendar,
    Universe,
    calendar_from_csv,
    find_gaps,
    load_ohlcv_csv,
    monthly_range,
    months_between,
    save_ohlcv_csv,
    simple_returns,
)

from conftest import series_from_closes


def weekdays(start: Date, n: int):
    out = []
    day = start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += timedelta(days=1)
    return out


CAL_2021 = TradingCalendar(weekdays(Date(2021, 1, 4), 300))


def write_rows(path, rows):
    with open(path, "w") as handle:
        handle.write("date,symbol,open,high,low,close,volume\n")
        for row in rows:
            handle.write(",".join(str(x) for x in row) + "\n")


class TestBar:
    def test_valid_bar_passes(self):
        Bar(Date(2021, 1, 4), 10.0, 11.0, 9.0, 10.5, 1000).validate("X")

    def test_low_above_high_rejected(self):
        bar = Bar(Date(2021, 1, 4), 10.0, 9.0, 11.0, 10.0, 0)
        with pytest.raises(DataValidationError):
            bar.validate("X")

    def test_close_outside_range_rejected(self):
        bar = Bar(Date(2021, 1, 4), 10.0, 11.0, 9.5, 12.0, 0)
        with pytest.raises(DataValidationError):
            bar.validate("X")

    def test_nonpositive_price_rejected(self):
        bar = Bar(Date(2021, 1, 4), 0.0, 1.0, 0.0, 0.5, 10)
        with pytest.raises(DataValidationError):
            bar.validate("X")

    def test_negative_volume_rejected(self):
        bar = Bar(Date(2021, 1, 4), 1.0, 1.0, 1.0, 1.0, -1)
        with pytest.raises(DataValidationError):
            bar.validate("X")


class TestPriceSeries:
    def test_duplicate_dates_rejected(self):
        d = Date(2021, 1, 4)
        bars = [Bar(d, 1, 1, 1, 1, 0), Bar(d, 1, 1, 1, 1, 0)]
        with pytest.raises(DataValidationError):
            PriceSeries(symbol="X", bars=bars)

    def test_last_close_on_or_before(self):
        dates = weekdays(Date(2021, 1, 4), 5)
        series = series_from_closes("X", [dates[0], dates[2], dates[4]], [1, 2, 3])
        assert series.last_close_on_or_before(dates[0]) == 1
        assert series.last_close_on_or_before(dates[1]) == 1
        assert series.last_close_on_or_before(dates[3]) == 2
        assert series.last_close_on_or_before(Date(2020, 12, 31)) is None

    def test_window_ending_at(self):
        dates = weekdays(Date(2021, 1, 4), 10)
        series = series_from_closes("X", dates, list(range(1, 11)))
        window = series.window_ending_at(dates[-1], 4)
        assert [b.close for b in window] == [7, 8, 9, 10]
        with pytest.raises(InsufficientHistoryError):
            series.window_ending_at(dates[2], 4)


class TestUniverse:
    def test_benchmark_must_not_be_member(self):
        with pytest.raises(DataValidationError):
            Universe(symbols=frozenset({"A", "B"}), benchmark="A")

    def test_empty_universe_rejected(self):
        with pytest.raises(DataValidationError):
            Universe(symbols=frozenset(), benchmark="B")


class TestCalendar:
    def test_month_starts_are_first_trading_days(self):
        dates = [Date(2021, 1, 29), Date(2021, 2, 1), Date(2021, 2, 2),
                 Date(2021, 3, 1)]
        cal = TradingCalendar(dates)
        assert cal.month_start_dates() == [
            Date(2021, 1, 29), Date(2021, 2, 1), Date(2021, 3, 1),
        ]

    def test_unsorted_dates_rejected(self):
        with pytest.raises(DataValidationError):
            TradingCalendar([Date(2021, 1, 5), Date(2021, 1, 4)])


class TestLoadCsv:
    def test_three_valid_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        days = CAL_2021.dates[:3]
        write_rows(path, [
            (d.isoformat(), "ABC", 10, 11, 9, 10.5, 100) for d in days
        ])
        loaded = load_ohlcv_csv(path, CAL_2021)
        assert set(loaded) == {"ABC"}
        assert len(loaded["ABC"]) == 3

    def test_low_above_high_raises_validation(self, tmp_path):
        path = tmp_path / "d.csv"
        write_rows(path, [("2021-01-04", "ABC", 10, 9, 11, 10, 100)])
        with pytest.raises(DataValidationError, match="ABC"):
            load_ohlcv_csv(path, CAL_2021)

    def test_two_symbols_full_year(self, tmp_path):
        path = tmp_path / "d.csv"
        days = CAL_2021.dates[:252]
        rows = []
        for sym in ("AAA", "BBB"):
            rows += [(d.isoformat(), sym, 10, 10, 10, 10, 5) for d in days]
        write_rows(path, rows)
        # line-count oracle: header + one line per row
        with open(path) as handle:
            assert sum(1 for _ in handle) == 1 + 2 * 252
        loaded = load_ohlcv_csv(path, CAL_2021)
        assert len(loaded) == 2
        assert len(loaded["AAA"]) == 252
        assert len(loaded["BBB"]) == 252

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = tmp_path / "d.csv"
        with open(path, "w") as handle:
            handle.write("date,symbol,open,high,low,close,volume\n")
            handle.write("2021-01-04,ABC,10,11,9,10.5,100\n")
            handle.write("not-a-date,ABC,10,11,9,10.5,100\n")
        with pytest.raises(ParseError, match="line 3"):
            load_ohlcv_csv(path, CAL_2021)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        with open(path, "w") as handle:
            handle.write("date,sym,open,high,low,close,volume\n")
        with pytest.raises(ParseError):
            load_ohlcv_csv(path, CAL_2021)

    def test_rows_outside_calendar_dropped(self, tmp_path):
        path = tmp_path / "d.csv"
        write_rows(path, [
            ("2021-01-02", "ABC", 1, 1, 1, 1, 0),   # Saturday, not in calendar
            ("2021-01-04", "ABC", 1, 1, 1, 1, 0),
        ])
        loaded = load_ohlcv_csv(path, CAL_2021)
        assert len(loaded["ABC"]) == 1

    def test_unsorted_rows_sorted_per_symbol(self, tmp_path):
        path = tmp_path / "d.csv"
        days = CAL_2021.dates[:3]
        write_rows(path, [
            (days[2].isoformat(), "ABC", 3, 3, 3, 3, 0),
            (days[0].isoformat(), "ABC", 1, 1, 1, 1, 0),
            (days[1].isoformat(), "ABC", 2, 2, 2, 2, 0),
        ])
        loaded = load_ohlcv_csv(path, CAL_2021)
        assert loaded["ABC"].closes() == [1, 2, 3]

    def test_gaps_detected_not_filled(self, tmp_path):
        path = tmp_path / "d.csv"
        days = CAL_2021.dates[:5]
        kept = [days[0], days[1], days[3], days[4]]
        write_rows(path, [(d.isoformat(), "ABC", 1, 1, 1, 1, 0) for d in kept])
        loaded = load_ohlcv_csv(path, CAL_2021)
        assert len(loaded["ABC"]) == 4
        assert find_gaps(loaded["ABC"], CAL_2021) == [days[2]]

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        days = CAL_2021.dates[:40]
        closes = 50.0 * np.cumprod(1 + 0.01 * rng.standard_normal(40))
        original = {"XYZ": series_from_closes("XYZ", days, [float(c) for c in closes])}
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        save_ohlcv_csv(first, original)
        reloaded = load_ohlcv_csv(first, CAL_2021)
        save_ohlcv_csv(second, reloaded)
        assert first.read_bytes() == second.read_bytes()


class TestCalendarFromCsv:
    def test_benchmark_rows_define_calendar(self, tmp_path):
        path = tmp_path / "d.csv"
        write_rows(path, [
            ("2021-01-04", "SPX", 1, 1, 1, 1, 0),
            ("2021-01-05", "SPX", 1, 1, 1, 1, 0),
            ("2021-01-05", "AAA", 1, 1, 1, 1, 0),
            ("2021-01-06", "AAA", 1, 1, 1, 1, 0),
        ])
        cal = calendar_from_csv(path, "SPX")
        assert cal.dates == [Date(2021, 1, 4), Date(2021, 1, 5)]

    def test_missing_benchmark_is_an_error(self, tmp_path):
        path = tmp_path / "d.csv"
        write_rows(path, [("2021-01-04", "AAA", 1, 1, 1, 1, 0)])
        with pytest.raises(EngineError):
            calendar_from_csv(path, "SPX")


class TestSimpleReturns:
    def test_ten_percent_step(self):
        series = series_from_closes("X", CAL_2021.dates[:2], [100.0, 110.0])
        returns = simple_returns(series)
        assert returns == pytest.approx([0.10], abs=1e-12)

    def test_constant_closes_zero(self):
        series = series_from_closes("X", CAL_2021.dates[:5], [7.0] * 5)
        assert simple_returns(series) == [0.0] * 4

    def test_up_then_down(self):
        series = series_from_closes("X", CAL_2021.dates[:3], [100.0, 110.0, 99.0])
        returns = simple_returns(series)
        assert returns == pytest.approx([0.10, -0.10], abs=1e-12)

    def test_too_short_raises(self):
        series = series_from_closes("X", CAL_2021.dates[:1], [100.0])
        with pytest.raises(InsufficientHistoryError):
            simple_returns(series)

    def test_composition_matches_total_growth(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            closes = 100.0 * np.cumprod(1 + 0.02 * rng.standard_normal(n))
            series = series_from_closes(
                "X", CAL_2021.dates[:n], [float(c) for c in closes]
            )
            product = np.prod([1 + r for r in simple_returns(series)])
            assert product == pytest.approx(closes[-1] / closes[0], rel=1e-12)


class TestMonthlyRange:
    def make_month(self, highs, lows, closes):
        days = [d for d in CAL_2021.dates if (d.year, d.month) == (2021, 1)]
        bars = [
            Bar(days[i], closes[i], highs[i], lows[i], closes[i], 0)
            for i in range(len(highs))
        ]
        return PriceSeries(symbol="X", bars=bars)

    def test_twenty_percent_range(self):
        series = self.make_month(
            highs=[110.0, 105.0], lows=[95.0, 90.0], closes=[102.0, 98.0]
        )
        assert monthly_range(series, (2021, 1)) == pytest.approx(0.20, abs=1e-12)

    def test_constant_prices_zero(self):
        series = self.make_month(
            highs=[100.0] * 3, lows=[100.0] * 3, closes=[100.0] * 3
        )
        assert monthly_range(series, (2021, 1)) == 0.0

    def test_instability_threshold_comparison(self):
        series = self.make_month(
            highs=[109.0], lows=[91.0], closes=[100.0]
        )
        assert monthly_range(series, (2021, 1)) > 0.17

    def test_empty_month_raises(self):
        series = self.make_month(highs=[100.0], lows=[99.0], closes=[99.5])
        with pytest.raises(InsufficientHistoryError):
            monthly_range(series, (2021, 5))

    def test_scale_invariance(self):
        rng = np.random.default_rng(12)
        days = [d for d in CAL_2021.dates if (d.year, d.month) == (2021, 2)]
        for _ in range(20):
            closes = 50 + 10 * rng.uniform(size=len(days))
            highs = closes * (1 + 0.02 * rng.uniform(size=len(days)))
            lows = closes * (1 - 0.02 * rng.uniform(size=len(days)))
            k = float(rng.uniform(0.1, 10.0))
            base = PriceSeries("X", [
                Bar(days[i], closes[i], highs[i], lows[i], closes[i], 0)
                for i in range(len(days))
            ])
            scaled = PriceSeries("X", [
                Bar(days[i], k * closes[i], k * highs[i], k * lows[i],
                    k * closes[i], 0)
                for i in range(len(days))
            ])
            assert monthly_range(base, (2021, 2)) == pytest.approx(
                monthly_range(scaled, (2021, 2)), rel=1e-12
            )


def test_months_between_spans_year_boundary():
    assert months_between(Date(2020, 11, 15), Date(2021, 2, 1)) == [
        (2020, 11), (2020, 12), (2021, 1), (2021, 2),
    ]
