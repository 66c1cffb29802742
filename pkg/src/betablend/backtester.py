"""Monthly rebalance loop: signals to positions to equity curve.

On the first trading day of each month the strategy recomputes features,
retrains the classifier on the previous two months, builds the sleeve
portfolios, combines and leverages them, and trades to the target at
that day's close. Between rebalances positions drift with prices. All
state transitions are deterministic given config and data.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, fields as dataclass_fields
from datetime import date as Date
from datetime import datetime
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .classifier import (
    AdaBoostModel,
    build_training_set,
    predict_scores,
    train_adaboost,
)
from .exceptions import (
    ConfigError,
    EmptyTrainingSetError,
    EngineError,
    ParseError,
)
from .indicators import WARMUP_BARS, compute_features
from .market_data import PriceSeries, TradingCalendar
from .metrics import EquityCurve
from .portfolio import (
    BetaEstimate,
    TargetPortfolio,
    apply_leverage,
    assign_quintiles,
    combine,
    estimate_beta,
    long_short_weights,
    mvp_weights,
    select_low_beta,
)

logger = logging.getLogger(__name__)

STRATEGIES = ("momentum", "mvp", "combo")

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class CostModel:
    """Two-parameter execution cost model, charged at every trade."""

    commission_per_share: float = 0.005
    slippage_fraction: float = 0.0005

    def __post_init__(self) -> None:
        if self.commission_per_share < 0 or self.slippage_fraction < 0:
            raise ConfigError("cost parameters must be >= 0")


@dataclass
class BacktestConfig:
    """Flat run configuration; every field has a default.

    `start`/`end` of None mean the widest feasible window given warm-up
    requirements. `symbols` of None means every non-benchmark symbol in
    the data file.
    """

    data_path: str = "data.csv"
    benchmark: str = "BENCH"
    symbols: Optional[List[str]] = None
    start: Optional[Date] = None
    end: Optional[Date] = None
    strategy: str = "combo"
    long_fraction: float = 0.5
    combo_split: float = 0.5
    leverage: float = 1.0
    commission_per_share: float = 0.005
    slippage_fraction: float = 0.0005
    financing_rate_annual: float = 0.0
    borrow_fee_annual: float = 0.0
    range_threshold: float = 0.17
    n_rounds: int = 50
    training_months: int = 2
    low_beta_count: int = 25
    beta_lookback: int = 66
    mvp_lookback: int = 63
    initial_capital: float = 1_000_000.0
    fractional_shares: bool = False
    mvp_diagonal_loading: bool = False
    risk_free_annual: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.start is not None and self.end is not None and self.start >= self.end:
            raise ConfigError(f"start {self.start} must precede end {self.end}")
        if self.leverage < 1:
            raise ConfigError(f"leverage must be >= 1, got {self.leverage}")
        if not 0 < self.long_fraction < 1:
            raise ConfigError(
                f"long_fraction must be in (0, 1), got {self.long_fraction}"
            )
        if not 0 <= self.combo_split <= 1:
            raise ConfigError(f"combo_split must be in [0, 1], got {self.combo_split}")
        if self.commission_per_share < 0 or self.slippage_fraction < 0:
            raise ConfigError("cost parameters must be >= 0")
        if self.financing_rate_annual < 0 or self.borrow_fee_annual < 0:
            raise ConfigError("financing and borrow rates must be >= 0")
        if self.range_threshold <= 0:
            raise ConfigError("range_threshold must be positive")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.training_months < 1:
            raise ConfigError("training_months must be >= 1")
        if self.low_beta_count < 2:
            raise ConfigError("low_beta_count must be >= 2")
        if self.beta_lookback < 2 or self.mvp_lookback < 2:
            raise ConfigError("lookbacks must be >= 2")
        if self.initial_capital <= 0:
            raise ConfigError("initial_capital must be positive")

    def cost_model(self) -> CostModel:
        return CostModel(
            commission_per_share=self.commission_per_share,
            slippage_fraction=self.slippage_fraction,
        )

    def to_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {}
        for f in dataclass_fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Date):
                value = value.isoformat()
            out[f.name] = value
        return out


_DATE_FIELDS = {"start", "end"}
_CONFIG_FIELDS = {f.name: f for f in dataclass_fields(BacktestConfig)}


def _coerce_config_value(key: str, value: object) -> object:
    if key in _DATE_FIELDS and value is not None:
        if isinstance(value, Date):
            return value
        try:
            return datetime.strptime(str(value), "%Y-%m-%d").date()
        except ValueError as exc:
            raise ConfigError(f"{key}: expected YYYY-MM-DD, got {value!r}") from exc
    if key == "symbols" and value is not None:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(s, str) for s in value
        ):
            raise ConfigError("symbols must be a list of tickers")
        return list(value)
    return value


def config_from_dict(payload: Mapping[str, object]) -> BacktestConfig:
    """Build and validate a config, rejecting unknown keys."""
    unknown = sorted(set(payload) - set(_CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {k: _coerce_config_value(k, v) for k, v in payload.items()}
    try:
        config = BacktestConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def load_config(path) -> BacktestConfig:
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(payload)


def apply_overrides(
    config: BacktestConfig, overrides: Sequence[str]
) -> BacktestConfig:
    """Apply `key=value` override strings; last one wins per key."""
    payload = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        payload[key] = value
    return config_from_dict(payload)


@dataclass
class MarketData:
    """Loaded series plus the calendar and benchmark they align to."""

    series: Dict[str, PriceSeries]
    calendar: TradingCalendar
    benchmark: str

    def __post_init__(self) -> None:
        if self.benchmark not in self.series:
            raise EngineError(f"benchmark {self.benchmark} missing from data")

    @property
    def benchmark_series(self) -> PriceSeries:
        return self.series[self.benchmark]

    def universe_symbols(self, requested: Optional[Sequence[str]] = None) -> List[str]:
        available = sorted(s for s in self.series if s != self.benchmark)
        if requested is None:
            return available
        missing = sorted(set(requested) - set(available))
        if missing:
            raise EngineError(f"symbols not in data: {', '.join(missing)}")
        return sorted(requested)


@dataclass(frozen=True)
class TradeRecord:
    date: Date
    symbol: str
    shares: float
    price: float
    commission: float
    slippage: float


@dataclass
class RebalanceRecord:
    date: Date
    target: TargetPortfolio
    model: Optional[AdaBoostModel] = None
    quintiles: Optional[Dict[str, int]] = None


@dataclass
class BacktestResult:
    curve: EquityCurve
    trades: List[TradeRecord]
    rebalances: List[RebalanceRecord]
    wiped_out: bool = False


def rebalance_to_targets(
    positions: Mapping[str, float],
    target: TargetPortfolio,
    prices: Mapping[str, float],
    costs: CostModel,
    equity: float,
    fractional_shares: bool = False,
) -> Tuple[Dict[str, float], float, List[TradeRecord]]:
    """Trade from current positions to the target book at the given closes.

    Share counts round toward zero unless fractional mode is on.
    Commission is charged per share traded, slippage as a fraction of
    trade value, both always reducing cash. Symbols with a target weight
    but no price are skipped and their weight is redistributed
    proportionally across the priced names; held symbols with no price
    cannot be traded and are left in place.
    """
    weights = dict(target.weights)
    unpriced = sorted(s for s in weights if s not in prices and weights[s] != 0.0)
    if unpriced:
        dropped_gross = sum(abs(weights[s]) for s in unpriced)
        for symbol in unpriced:
            logger.warning(
                "%s: no price on %s; weight redistributed", symbol, target.as_of
            )
            del weights[symbol]
        remaining_gross = sum(abs(w) for w in weights.values())
        if remaining_gross > 0 and dropped_gross > 0:
            scale = (remaining_gross + dropped_gross) / remaining_gross
            weights = {s: w * scale for s, w in weights.items()}

    desired: Dict[str, float] = {}
    for symbol in sorted(weights):
        weight = weights[symbol]
        if weight == 0.0:
            continue
        price = prices[symbol]
        raw_shares = weight * equity / price
        desired[symbol] = raw_shares if fractional_shares else float(int(raw_shares))

    new_positions: Dict[str, float] = {}
    cash_delta = 0.0
    trades: List[TradeRecord] = []
    for symbol in sorted(set(positions) | set(desired)):
        current = positions.get(symbol, 0.0)
        wanted = desired.get(symbol, 0.0)
        if symbol not in prices:
            if current != 0.0:
                logger.warning(
                    "%s: no price on %s; position held as-is", symbol, target.as_of
                )
                new_positions[symbol] = current
            continue
        delta = wanted - current
        if delta != 0.0:
            price = prices[symbol]
            trade_value = delta * price
            commission = costs.commission_per_share * abs(delta)
            slippage = costs.slippage_fraction * abs(trade_value)
            cash_delta -= trade_value + commission + slippage
            trades.append(
                TradeRecord(
                    date=target.as_of,
                    symbol=symbol,
                    shares=delta,
                    price=price,
                    commission=commission,
                    slippage=slippage,
                )
            )
        if wanted != 0.0:
            new_positions[symbol] = wanted
    return new_positions, cash_delta, trades


@dataclass
class RebalanceContext:
    """Everything a strategy may look at on a rebalance date."""

    data: MarketData
    config: BacktestConfig
    as_of: Date
    calendar_index: int
    month_start_position: int
    universe: List[str]


TargetBuilder = Callable[[RebalanceContext], Optional[TargetPortfolio]]


class SmartBetaStrategy:
    """Built-in momentum / minimum-variance / combo pipeline.

    Keeps the previously trained classifier so a rebalance whose entire
    training window was filtered as unstable can fall back to it; with
    no previous model the momentum sleeve holds cash for the month.
    """

    def __init__(self, config: BacktestConfig):
        self.config = config
        self.last_model: Optional[AdaBoostModel] = None
        self.last_record: Optional[RebalanceRecord] = None

    # -- momentum sleeve -------------------------------------------------

    def _training_inputs(self, ctx: RebalanceContext):
        calendar = ctx.data.calendar
        month_starts = calendar.month_starts
        pos = ctx.month_start_position
        if pos < self.config.training_months:
            raise EngineError(
                f"not enough history before {ctx.as_of} for "
                f"{self.config.training_months} training months"
            )
        features_by_month = {}
        returns_by_month = {}
        for k in range(self.config.training_months, 0, -1):
            snap_idx = month_starts[pos - k]
            next_idx = month_starts[pos - k + 1]
            snap_date = calendar.dates[snap_idx]
            next_date = calendar.dates[next_idx]
            month = calendar.month_of(snap_date)
            matrix = compute_features(ctx.data.series, ctx.universe, snap_date)
            month_returns = {}
            for symbol in matrix.symbols:
                series = ctx.data.series[symbol]
                if series.has_date(next_date):
                    start_close = series.close_at(snap_date)
                    month_returns[symbol] = series.close_at(next_date) / start_close - 1.0
            features_by_month[month] = matrix
            returns_by_month[month] = month_returns
        return features_by_month, returns_by_month

    def momentum_target(self, ctx: RebalanceContext) -> TargetPortfolio:
        features_by_month, returns_by_month = self._training_inputs(ctx)
        try:
            examples = build_training_set(
                features_by_month,
                returns_by_month,
                ctx.data.benchmark_series,
                range_threshold=self.config.range_threshold,
            )
            model = train_adaboost(examples, n_rounds=self.config.n_rounds)
            self.last_model = model
        except EmptyTrainingSetError:
            if self.last_model is None:
                logger.warning(
                    "%s: training window unstable and no prior model; "
                    "momentum sleeve holds cash",
                    ctx.as_of,
                )
                self._note(ctx, model=None, quintiles=None)
                return TargetPortfolio(as_of=ctx.as_of, weights={})
            logger.info("%s: training window unstable; reusing prior model", ctx.as_of)
            model = self.last_model

        current = compute_features(ctx.data.series, ctx.universe, ctx.as_of)
        scores = predict_scores(model, current)
        quintiles = assign_quintiles(scores)
        self._note(ctx, model=model, quintiles=quintiles)
        return long_short_weights(
            quintiles, as_of=ctx.as_of, long_fraction=self.config.long_fraction
        )

    # -- minimum-variance sleeve ------------------------------------------

    def _aligned_returns(
        self, ctx: RebalanceContext, symbol: str, lookback: int
    ) -> Optional[List[float]]:
        """Close-to-close returns over the last `lookback` calendar steps,
        or None when the symbol misses any date in the window."""
        calendar = ctx.data.calendar
        end_index = ctx.calendar_index
        if end_index < lookback:
            return None
        window_dates = calendar.dates[end_index - lookback : end_index + 1]
        series = ctx.data.series.get(symbol)
        if series is None:
            return None
        closes = []
        for d in window_dates:
            if not series.has_date(d):
                return None
            closes.append(series.close_at(d))
        return [cur / prev - 1.0 for prev, cur in zip(closes, closes[1:])]

    def mvp_target(self, ctx: RebalanceContext) -> TargetPortfolio:
        cfg = self.config
        eligibility_lookback = max(cfg.beta_lookback, cfg.mvp_lookback)
        benchmark_returns = self._aligned_returns(
            ctx, ctx.data.benchmark, cfg.beta_lookback
        )
        if benchmark_returns is None:
            raise EngineError(
                f"benchmark lacks {cfg.beta_lookback} returns before {ctx.as_of}"
            )
        betas: List[BetaEstimate] = []
        returns_cache: Dict[str, List[float]] = {}
        for symbol in ctx.universe:
            aligned = self._aligned_returns(ctx, symbol, eligibility_lookback)
            if aligned is None:
                continue
            beta_window = aligned[-cfg.beta_lookback:]
            betas.append(
                BetaEstimate(
                    symbol=symbol,
                    beta=estimate_beta(beta_window, benchmark_returns),
                    lookback=cfg.beta_lookback,
                )
            )
            returns_cache[symbol] = aligned[-cfg.mvp_lookback:]
        selected = select_low_beta(betas, count=cfg.low_beta_count)
        matrix = {symbol: returns_cache[symbol] for symbol in selected}
        return mvp_weights(
            matrix, as_of=ctx.as_of, diagonal_loading=cfg.mvp_diagonal_loading
        )

    # ---------------------------------------------------------------------

    def _note(self, ctx, model, quintiles) -> None:
        self.last_record = RebalanceRecord(
            date=ctx.as_of,
            target=TargetPortfolio(as_of=ctx.as_of, weights={}),
            model=model,
            quintiles=quintiles,
        )

    def __call__(self, ctx: RebalanceContext) -> TargetPortfolio:
        cfg = self.config
        self.last_record = None
        if cfg.strategy == "momentum":
            book = self.momentum_target(ctx)
        elif cfg.strategy == "mvp":
            book = self.mvp_target(ctx)
        else:
            momentum = self.momentum_target(ctx)
            low_var = self.mvp_target(ctx)
            book = combine(momentum, low_var, split=cfg.combo_split)
        if cfg.leverage != 1.0:
            book = apply_leverage(book, factor=cfg.leverage)
        if self.last_record is None:
            self._note(ctx, model=None, quintiles=None)
        self.last_record.target = book
        return book


def _warmup_feasible(
    config: BacktestConfig, calendar: TradingCalendar, position: int
) -> bool:
    """Whether the month start at `position` has full warm-up on the calendar."""
    month_starts = calendar.month_starts
    idx = month_starts[position]
    if config.strategy in ("momentum", "combo"):
        if position < config.training_months:
            return False
        oldest_snap = month_starts[position - config.training_months]
        if oldest_snap < WARMUP_BARS - 1:
            return False
    if config.strategy in ("mvp", "combo"):
        if idx < max(config.beta_lookback, config.mvp_lookback):
            return False
    return True


def _first_rebalance_position(
    config: BacktestConfig, calendar: TradingCalendar
) -> int:
    month_start_dates = calendar.month_start_dates()
    for position, date in enumerate(month_start_dates):
        if config.start is not None and date < config.start:
            continue
        if config.end is not None and date > config.end:
            break
        if _warmup_feasible(config, calendar, position):
            return position
        if config.start is not None:
            raise EngineError(
                f"warm-up not satisfiable: first rebalance {date} lacks history"
            )
    raise EngineError("warm-up not satisfiable: no feasible rebalance date")


def _first_position_in_window(
    config: BacktestConfig, calendar: TradingCalendar
) -> int:
    for position, date in enumerate(calendar.month_start_dates()):
        if config.start is not None and date < config.start:
            continue
        if config.end is not None and date > config.end:
            break
        return position
    raise EngineError("no month start inside the configured window")


def rebalance_schedule(
    config: BacktestConfig,
    calendar: TradingCalendar,
    require_warmup: bool = True,
) -> Tuple[int, int, Dict[int, int]]:
    """Run window and rebalance dates for a config.

    Returns (start calendar index, end calendar index, mapping of
    calendar index -> month-start position) so callers can walk the
    same dates the backtest loop will. `require_warmup` is off for
    injected strategies, which state no lookback needs of their own.
    """
    if require_warmup:
        first_position = _first_rebalance_position(config, calendar)
    else:
        first_position = _first_position_in_window(config, calendar)
    start_index = calendar.month_starts[first_position]
    if config.end is not None:
        end_index = max(
            (i for i, d in enumerate(calendar.dates) if d <= config.end),
            default=-1,
        )
    else:
        end_index = len(calendar.dates) - 1
    if end_index < start_index:
        raise EngineError("no trading dates in the configured window")
    rebalance_indices = {
        idx: pos
        for pos, idx in enumerate(calendar.month_starts)
        if start_index <= idx <= end_index and pos >= first_position
    }
    return start_index, end_index, rebalance_indices


def run_backtest(
    config: BacktestConfig,
    data: MarketData,
    strategy: Optional[TargetBuilder] = None,
) -> BacktestResult:
    """Drive the monthly loop and return the equity curve and trade log.

    `strategy` defaults to the built-in pipeline selected by
    `config.strategy`; tests may inject a scripted target builder.
    """
    config.validate()
    calendar = data.calendar
    universe = data.universe_symbols(config.symbols)
    builder: TargetBuilder
    smart: Optional[SmartBetaStrategy] = None
    if strategy is None:
        smart = SmartBetaStrategy(config)
        builder = smart
    else:
        builder = strategy

    start_index, end_index, rebalance_indices = rebalance_schedule(
        config, calendar, require_warmup=smart is not None
    )

    cash = config.initial_capital
    positions: Dict[str, float] = {}
    curve_dates: List[Date] = []
    curve_values: List[float] = []
    trades: List[TradeRecord] = []
    rebalances: List[RebalanceRecord] = []
    wiped_out = False

    def mark_value(date: Date) -> float:
        total = 0.0
        for symbol in sorted(positions):
            shares = positions[symbol]
            if shares == 0.0:
                continue
            series = data.series.get(symbol)
            price = series.last_close_on_or_before(date) if series else None
            if price is None:
                raise EngineError(f"{symbol}: no price at or before {date}")
            total += shares * price
        return total

    for index in range(start_index, end_index + 1):
        date = calendar.dates[index]
        if index in rebalance_indices:
            ctx = RebalanceContext(
                data=data,
                config=config,
                as_of=date,
                calendar_index=index,
                month_start_position=rebalance_indices[index],
                universe=universe,
            )
            target = builder(ctx)
            if target is not None:
                equity = cash + mark_value(date)
                prices = {
                    s: data.series[s].close_at(date)
                    for s in set(target.weights) | set(positions)
                    if s in data.series and data.series[s].has_date(date)
                }
                positions, cash_delta, day_trades = rebalance_to_targets(
                    positions,
                    target,
                    prices,
                    config.cost_model(),
                    equity,
                    fractional_shares=config.fractional_shares,
                )
                cash += cash_delta
                trades.extend(day_trades)
                if smart is not None and smart.last_record is not None:
                    rebalances.append(smart.last_record)
                else:
                    rebalances.append(RebalanceRecord(date=date, target=target))

        equity = cash + mark_value(date)
        if config.financing_rate_annual > 0 or config.borrow_fee_annual > 0:
            gross_value = 0.0
            short_value = 0.0
            for symbol in sorted(positions):
                shares = positions[symbol]
                if shares == 0.0:
                    continue
                price = data.series[symbol].last_close_on_or_before(date)
                value = shares * price
                gross_value += abs(value)
                if value < 0:
                    short_value += -value
            financing = (
                config.financing_rate_annual
                / TRADING_DAYS_PER_YEAR
                * max(gross_value - equity, 0.0)
            )
            borrow = config.borrow_fee_annual / TRADING_DAYS_PER_YEAR * short_value
            if financing or borrow:
                cash -= financing + borrow
                equity -= financing + borrow

        curve_dates.append(date)
        curve_values.append(equity)
        if equity <= 0:
            logger.error("wipeout on %s: equity %.2f; run terminated", date, equity)
            wiped_out = True
            break

    return BacktestResult(
        curve=EquityCurve(dates=curve_dates, values=curve_values),
        trades=trades,
        rebalances=rebalances,
        wiped_out=wiped_out,
    )


def benchmark_curve(data: MarketData, dates: Sequence[Date]) -> EquityCurve:
    """The benchmark's own closes restricted to `dates` (its 'equity curve')."""
    series = data.benchmark_series
    usable = [d for d in dates if series.has_date(d)]
    return EquityCurve(dates=usable, values=[series.close_at(d) for d in usable])


# ---------------------------------------------------------------------------
# file formats


def _format_shares(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.6f}"


def write_equity_curve_csv(path, curve: EquityCurve) -> None:
    """`date,value,return` rows; the first row's return is 0."""
    returns = [0.0] + curve.daily_returns()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "value", "return"])
        for date, value, ret in zip(curve.dates, curve.values, returns):
            writer.writerow([date.isoformat(), f"{value:.6f}", f"{ret:.10f}"])


def read_equity_curve_csv(path) -> EquityCurve:
    """Inverse of write_equity_curve_csv; the return column is recomputed."""
    dates: List[Date] = []
    values: List[float] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["date", "value"]:
            raise ParseError(f"{path}: expected header date,value,return", line=1)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                dates.append(datetime.strptime(row[0], "%Y-%m-%d").date())
                values.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}: bad row {row!r}", line=line_no) from exc
    return EquityCurve(dates=dates, values=values)


def write_trades_csv(path, trades: Sequence[TradeRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "symbol", "shares", "price", "commission", "slippage"])
        for t in trades:
            writer.writerow(
                [
                    t.date.isoformat(),
                    t.symbol,
                    _format_shares(t.shares),
                    f"{t.price:.6f}",
                    f"{t.commission:.6f}",
                    f"{t.slippage:.6f}",
                ]
            )


def write_positions_csv(path, rebalances: Sequence[RebalanceRecord]) -> None:
    """Target weights per rebalance date, one row per (date, symbol)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "symbol", "weight"])
        for record in rebalances:
            for symbol in sorted(record.target.weights):
                writer.writerow(
                    [
                        record.date.isoformat(),
                        symbol,
                        f"{record.target.weights[symbol]:.12f}",
                    ]
                )
