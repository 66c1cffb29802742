"""Command line front end.

Every verb is a thin wrapper over a runner job: parse flags, call the
job, print a summary, map errors to exit codes. 0 means success, 1 a
runtime or data problem, 2 a config or validation problem. Errors go
to stderr as a single `error: <Kind>: <message>` line.
"""

from __future__ import annotations

import json
import logging
import sys
from datetime import date as Date
from pathlib import Path
from typing import Optional, Tuple

import click

from . import __version__
from .backtester import apply_overrides, load_config
from .exceptions import ConfigError, EngineError
from .runner import (
    parse_date,
    report_table,
    resolve_data_path,
    run_backtest_job,
    run_features_job,
    run_quintiles_job,
    run_report_job,
    run_synth_job,
)
from .synth import SynthConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _fail(exc: Exception, code: int) -> None:
    message = " ".join(str(exc).split())
    click.echo(f"error: {type(exc).__name__}: {message}", err=True)
    sys.exit(code)


def _guard(body) -> None:
    try:
        body()
    except ConfigError as exc:
        _fail(exc, EXIT_CONFIG)
    except EngineError as exc:
        _fail(exc, EXIT_RUNTIME)
    except OSError as exc:
        _fail(exc, EXIT_RUNTIME)


def _load(config_path: str, overrides: Tuple[str, ...]):
    config = load_config(config_path)
    if overrides:
        config = apply_overrides(config, overrides)
    return resolve_data_path(config, Path(config_path).parent)


@click.group()
@click.version_option(version=__version__, prog_name="betablend")
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug.")
def cli(verbose: int) -> None:
    """Backtests for classifier-ranked momentum and low-beta portfolios."""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--dump-models", is_flag=True, help="Also write models.json.")
def backtest(config_path, out_dir, overrides, dump_models) -> None:
    """Run a backtest; writes equity_curve.csv, trades.csv, positions.csv, report.json."""

    def body() -> None:
        config = _load(config_path, overrides)
        payload = run_backtest_job(config, out_dir, dump_models=dump_models)
        window = payload["window"]
        if payload["metrics"] is None:
            click.echo(
                f"{config.strategy}: wiped out on {window['end']}; "
                f"artifacts in {out_dir}"
            )
            return
        metrics = payload["metrics"]
        sharpe = metrics["sharpe"]
        sharpe_text = "n/a" if sharpe is None else f"{sharpe:.2f}"
        click.echo(
            f"{config.strategy}: {window['start']}..{window['end']} "
            f"total {100 * metrics['total_return']:.1f}% "
            f"sharpe {sharpe_text} -> {out_dir}"
        )

    _guard(body)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
def quintiles(config_path, out_dir, overrides) -> None:
    """Five long-only quintile backtests sharing one model sequence."""

    def body() -> None:
        config = _load(config_path, overrides)
        summary = run_quintiles_job(config, out_dir)
        for k in sorted(summary["quintiles"], key=int):
            entry = summary["quintiles"][k]
            click.echo(f"quintile {k}: total {100 * entry['total_return']:.1f}%")
        flag = "monotone" if summary["monotone"] else "no significant ordering"
        click.echo(f"spearman {summary['spearman']:.2f} ({flag}) -> {out_dir}")

    _guard(body)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--date", "as_of_text", default=None, metavar="YYYY-MM-DD")
def features(config_path, out_dir, overrides, as_of_text) -> None:
    """Dump the feature and rank snapshot for one date to features.csv."""

    def body() -> None:
        config = _load(config_path, overrides)
        as_of: Optional[Date] = parse_date(as_of_text) if as_of_text else None
        info = run_features_job(config, out_dir, as_of=as_of)
        click.echo(
            f"features for {info['n_symbols']} symbols as of {info['as_of']} "
            f"-> {info['file']}"
        )

    _guard(body)


@cli.command()
@click.option("--out", "out_path", default="data.csv", show_default=True)
@click.option("--symbols", "n_symbols", default=50, show_default=True, type=int)
@click.option("--days", "n_days", default=504, show_default=True, type=int)
@click.option("--start", "start_text", default="2020-01-01", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--benchmark", default="BENCH", show_default=True)
@click.option("--market-vol", default=0.008, show_default=True, type=float)
@click.option("--idio-vol", default=0.012, show_default=True, type=float)
@click.option("--drift-scale", default=0.003, show_default=True, type=float)
@click.option("--persistence", default=0.85, show_default=True, type=float)
@click.option("--beta-low", default=0.2, show_default=True, type=float)
@click.option("--beta-high", default=1.8, show_default=True, type=float)
@click.option("--gap-fraction", default=0.0, show_default=True, type=float)
def synth(
    out_path,
    n_symbols,
    n_days,
    start_text,
    seed,
    benchmark,
    market_vol,
    idio_vol,
    drift_scale,
    persistence,
    beta_low,
    beta_high,
    gap_fraction,
) -> None:
    """Generate a deterministic synthetic OHLCV fixture."""

    def body() -> None:
        config = SynthConfig(
            n_symbols=n_symbols,
            n_days=n_days,
            start=parse_date(start_text),
            seed=seed,
            benchmark=benchmark,
            market_vol=market_vol,
            idio_vol=idio_vol,
            drift_scale=drift_scale,
            persistence=persistence,
            beta_low=beta_low,
            beta_high=beta_high,
            gap_fraction=gap_fraction,
        )
        info = run_synth_job(config, out_path)
        click.echo(
            f"wrote {info['n_symbols']} symbols x {info['n_days']} days "
            f"(seed {info['seed']}) -> {info['file']}"
        )

    _guard(body)


@cli.command()
@click.argument("report_files", nargs=-1, type=click.Path(exists=True))
@click.option("--table", "as_table", is_flag=True, help="Print a comparison grid.")
@click.option("--curve", "curve_path", default=None, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--out", "out_path", default=None, help="Also write report.json here.")
def report(report_files, as_table, curve_path, config_path, overrides, out_path) -> None:
    """Metrics for an equity curve, or a grid over existing report files."""

    def body() -> None:
        if as_table:
            if not report_files:
                raise ConfigError("--table needs at least one report.json file")
            payloads = []
            for path in report_files:
                with open(path) as handle:
                    payloads.append(json.load(handle))
            click.echo(report_table(payloads))
            return
        if curve_path is None or config_path is None:
            raise ConfigError("report needs --curve and --config (or --table files)")
        config = _load(config_path, overrides)
        payload = run_report_job(curve_path, config, out_path=out_path)
        click.echo(json.dumps(payload["metrics"], indent=2, sort_keys=True))

    _guard(body)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port) -> None:
    """Run the HTTP service (same jobs as the CLI, over FastAPI)."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


def main() -> None:
    cli(prog_name="betablend")


if __name__ == "__main__":
    main()
