"""Job layer shared by the command line and the HTTP service.

Each job loads data, runs the requested computation, writes the
artifact files, and returns a JSON-ready payload. Keeping this out of
the CLI means the service endpoints and the terminal produce identical
artifacts for identical inputs.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import replace
from datetime import date as Date
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .backtester import (
    BacktestConfig,
    MarketData,
    RebalanceContext,
    SmartBetaStrategy,
    benchmark_curve,
    read_equity_curve_csv,
    rebalance_schedule,
    run_backtest,
    write_equity_curve_csv,
    write_positions_csv,
    write_trades_csv,
)
from .classifier import model_to_dict
from .exceptions import ConfigError, EngineError
from .indicators import compute_features, write_feature_csv
from .market_data import calendar_from_csv, load_ohlcv_csv
from .metrics import build_report
from .portfolio import QUINTILES, TargetPortfolio
from .synth import SynthConfig, write_fixture

logger = logging.getLogger(__name__)

MONOTONE_SPEARMAN = -0.8


def parse_date(text: str) -> Date:
    try:
        return datetime.strptime(text, "%Y-%m-%d").date()
    except ValueError as exc:
        raise ConfigError(f"expected YYYY-MM-DD, got {text!r}") from exc


def write_json(path, payload) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def resolve_data_path(config: BacktestConfig, base_dir) -> BacktestConfig:
    """Interpret a relative data_path against the config file's directory."""
    if os.path.isabs(config.data_path):
        return config
    return replace(config, data_path=str(Path(base_dir) / config.data_path))


def load_market_data(config: BacktestConfig) -> MarketData:
    calendar = calendar_from_csv(config.data_path, config.benchmark)
    series = load_ohlcv_csv(config.data_path, calendar)
    return MarketData(series=series, calendar=calendar, benchmark=config.benchmark)


def _report_payload(config: BacktestConfig, result, data: MarketData) -> Dict:
    curve = result.curve
    if result.wiped_out:
        metrics = None
    else:
        bench = benchmark_curve(data, curve.dates)
        metrics = build_report(
            curve, bench, risk_free_annual=config.risk_free_annual
        ).to_dict()
    return {
        "metrics": metrics,
        "config": config.to_dict(),
        "window": {
            "start": curve.dates[0].isoformat(),
            "end": curve.dates[-1].isoformat(),
            "n_days": len(curve.dates),
            "n_rebalances": len(result.rebalances),
            "n_trades": len(result.trades),
            "wiped_out": result.wiped_out,
        },
    }


def run_backtest_job(
    config: BacktestConfig, out_dir, dump_models: bool = False
) -> Dict:
    """Run one backtest; writes the four artifact files, returns the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_market_data(config)
    result = run_backtest(config, data)
    payload = _report_payload(config, result, data)
    write_equity_curve_csv(out / "equity_curve.csv", result.curve)
    write_trades_csv(out / "trades.csv", result.trades)
    write_positions_csv(out / "positions.csv", result.rebalances)
    write_json(out / "report.json", payload)
    if dump_models:
        entries = [
            {"date": r.date.isoformat(), "model": model_to_dict(r.model)}
            for r in result.rebalances
            if r.model is not None
        ]
        write_json(out / "models.json", entries)
    return payload


class ScheduleStrategy:
    """Scripted targets: trades to a fixed book on listed dates, else holds."""

    def __init__(self, schedule: Dict[Date, TargetPortfolio]):
        self.schedule = schedule

    def __call__(self, ctx: RebalanceContext) -> Optional[TargetPortfolio]:
        return self.schedule.get(ctx.as_of)


def quintile_schedules(config: BacktestConfig, data: MarketData):
    """One classifier pass shared by all five quintile portfolios.

    Returns the momentum config used and, per quintile number, a
    date-to-target schedule of evenly weighted long books. A rebalance
    with no usable model schedules empty books (cash) for every
    quintile that month.
    """
    cfg = replace(config, strategy="momentum", leverage=1.0)
    cfg.validate()
    smart = SmartBetaStrategy(cfg)
    universe = data.universe_symbols(cfg.symbols)
    _, _, rebalance_indices = rebalance_schedule(cfg, data.calendar)
    schedules: Dict[int, Dict[Date, TargetPortfolio]] = {
        k: {} for k in range(1, QUINTILES + 1)
    }
    for index in sorted(rebalance_indices):
        as_of = data.calendar.dates[index]
        ctx = RebalanceContext(
            data=data,
            config=cfg,
            as_of=as_of,
            calendar_index=index,
            month_start_position=rebalance_indices[index],
            universe=universe,
        )
        smart.momentum_target(ctx)
        quintiles = smart.last_record.quintiles if smart.last_record else None
        for k in range(1, QUINTILES + 1):
            if quintiles is None:
                schedules[k][as_of] = TargetPortfolio(as_of=as_of, weights={})
                continue
            members = sorted(s for s, q in quintiles.items() if q == k)
            weights = {s: 1.0 / len(members) for s in members} if members else {}
            schedules[k][as_of] = TargetPortfolio(as_of=as_of, weights=weights)
    return cfg, schedules


def spearman_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise EngineError("spearman needs two equal-length sequences, n >= 2")

    def average_ranks(values: Sequence[float]) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        order = np.argsort(arr, kind="stable")
        ranks = np.empty(len(arr))
        i = 0
        while i < len(arr):
            j = i
            while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
                j += 1
            ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return ranks

    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = float(np.sqrt((rx**2).sum() * (ry**2).sum()))
    if denom == 0.0:
        raise EngineError("spearman undefined: an input is constant")
    return float((rx * ry).sum() / denom)


def run_quintiles_job(config: BacktestConfig, out_dir) -> Dict:
    """Five long-only quintile backtests plus a monotonicity summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_market_data(config)
    cfg, schedules = quintile_schedules(config, data)
    first_rebalance = min(schedules[1])
    sim_cfg = replace(cfg, start=first_rebalance)
    per_quintile = {}
    finals: List[float] = []
    for k in range(1, QUINTILES + 1):
        result = run_backtest(sim_cfg, data, strategy=ScheduleStrategy(schedules[k]))
        write_equity_curve_csv(out / f"quintile_{k}.csv", result.curve)
        total = result.curve.values[-1] / result.curve.values[0] - 1.0
        finals.append(total)
        per_quintile[str(k)] = {
            "final_value": result.curve.values[-1],
            "total_return": total,
        }
    rho = spearman_correlation(list(range(1, QUINTILES + 1)), finals)
    summary = {
        "quintiles": per_quintile,
        "spearman": rho,
        "monotone": bool(rho <= MONOTONE_SPEARMAN),
        "config": sim_cfg.to_dict(),
    }
    write_json(out / "quintiles.json", summary)
    return summary


def run_features_job(
    config: BacktestConfig, out_dir, as_of: Optional[Date] = None
) -> Dict:
    """Feature snapshot CSV for one date (default: end of the data window)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = load_market_data(config)
    target_date = as_of or config.end or data.calendar.dates[-1]
    usable = [d for d in data.calendar.dates if d <= target_date]
    if not usable:
        raise EngineError(f"no trading dates at or before {target_date}")
    snap = usable[-1]
    if snap != target_date:
        logger.info("%s is not a trading date; using %s", target_date, snap)
    matrix = compute_features(data.series, data.universe_symbols(config.symbols), snap)
    path = out / "features.csv"
    write_feature_csv(path, matrix)
    return {
        "as_of": snap.isoformat(),
        "n_symbols": len(matrix.symbols),
        "file": str(path),
    }


def run_synth_job(synth_config: SynthConfig, out_path) -> Dict:
    out = Path(out_path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    series = write_fixture(synth_config, out)
    return {
        "file": str(out),
        "n_symbols": len(series) - 1,
        "n_days": synth_config.n_days,
        "benchmark": synth_config.benchmark,
        "seed": synth_config.seed,
    }


def run_report_job(
    curve_path, config: BacktestConfig, out_path=None
) -> Dict:
    """Recompute the metrics report for an existing equity curve file."""
    curve = read_equity_curve_csv(curve_path)
    data = load_market_data(config)
    bench = benchmark_curve(data, curve.dates)
    report = build_report(curve, bench, risk_free_annual=config.risk_free_annual)
    payload = {
        "metrics": report.to_dict(),
        "config": config.to_dict(),
        "window": {
            "start": curve.dates[0].isoformat(),
            "end": curve.dates[-1].isoformat(),
            "n_days": len(curve.dates),
        },
    }
    if out_path is not None:
        write_json(out_path, payload)
    return payload


def report_table(payloads: Sequence[Dict]) -> str:
    """Comparison grid, one row per report, metric columns in percent."""
    headers = ["strategy", "ret%", "ann%", "sharpe", "beta", "maxdd%", "vol%"]
    rows = [headers]
    for payload in payloads:
        metrics = payload.get("metrics")
        config = payload.get("config", {})
        label = str(config.get("strategy", "?"))
        leverage = config.get("leverage", 1.0)
        try:
            if leverage is not None and float(leverage) != 1.0:
                label += f" x{float(leverage):g}"
        except (TypeError, ValueError):
            pass
        if metrics is None:
            rows.append([label] + ["n/a"] * (len(headers) - 1))
            continue
        sharpe = metrics.get("sharpe")
        rows.append(
            [
                label,
                f"{100.0 * metrics['total_return']:.1f}",
                f"{100.0 * metrics['annualized_return']:.1f}",
                "n/a" if sharpe is None else f"{sharpe:.2f}",
                f"{metrics['beta']:.2f}",
                f"{100.0 * metrics['max_drawdown']:.1f}",
                f"{100.0 * metrics['annual_volatility']:.1f}",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for n, row in enumerate(rows):
        cells = [
            cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
            for i, cell in enumerate(row)
        ]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
