"""FastAPI wrapper over the runner jobs.

Endpoints accept the same flat config document as the CLI and write
the same artifact files; responses carry the JSON payloads plus the
paths written. Engine validation failures map to 422, runtime and
data errors to 400.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..backtester import apply_overrides, config_from_dict
from ..exceptions import ConfigError, EngineError
from ..runner import (
    parse_date,
    run_backtest_job,
    run_features_job,
    run_quintiles_job,
    run_report_job,
    run_synth_job,
)
from ..synth import SynthConfig
from .models import (
    BacktestRequest,
    BacktestResponse,
    ConfigModel,
    FeaturesRequest,
    FeaturesResponse,
    HealthResponse,
    QuintilesRequest,
    QuintilesResponse,
    ReportRequest,
    ReportResponse,
    SynthRequest,
    SynthResponse,
)

logger = logging.getLogger(__name__)


def _build_config(model: ConfigModel, overrides):
    config = config_from_dict(model.to_payload())
    if overrides:
        config = apply_overrides(config, overrides)
    return config


def create_app() -> FastAPI:
    app = FastAPI(title="betablend", version=__version__)

    @app.exception_handler(ConfigError)
    async def config_error(_: Request, exc: ConfigError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(EngineError)
    async def engine_error(_: Request, exc: EngineError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(OSError)
    async def os_error(_: Request, exc: OSError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    async def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/backtest", response_model=BacktestResponse)
    async def backtest(request: BacktestRequest) -> BacktestResponse:
        config = _build_config(request.config, request.overrides)
        payload = run_backtest_job(
            config, request.output_dir, dump_models=request.dump_models
        )
        out = Path(request.output_dir)
        files = {
            "equity_curve": str(out / "equity_curve.csv"),
            "trades": str(out / "trades.csv"),
            "positions": str(out / "positions.csv"),
            "report": str(out / "report.json"),
        }
        if request.dump_models:
            files["models"] = str(out / "models.json")
        return BacktestResponse(files=files, **payload)

    @app.post("/quintiles", response_model=QuintilesResponse)
    async def quintiles(request: QuintilesRequest) -> QuintilesResponse:
        config = _build_config(request.config, request.overrides)
        summary = run_quintiles_job(config, request.output_dir)
        out = Path(request.output_dir)
        files = {
            f"quintile_{k}": str(out / f"quintile_{k}.csv")
            for k in sorted(summary["quintiles"], key=int)
        }
        files["summary"] = str(out / "quintiles.json")
        return QuintilesResponse(
            quintiles=summary["quintiles"],
            spearman=summary["spearman"],
            monotone=summary["monotone"],
            files=files,
        )

    @app.post("/features", response_model=FeaturesResponse)
    async def features(request: FeaturesRequest) -> FeaturesResponse:
        config = _build_config(request.config, request.overrides)
        as_of = parse_date(request.as_of) if request.as_of else None
        info = run_features_job(config, request.output_dir, as_of=as_of)
        return FeaturesResponse(**info)

    @app.post("/synth", response_model=SynthResponse)
    async def synth(request: SynthRequest) -> SynthResponse:
        config = SynthConfig(
            n_symbols=request.n_symbols,
            n_days=request.n_days,
            start=parse_date(request.start),
            seed=request.seed,
            benchmark=request.benchmark,
            market_vol=request.market_vol,
            idio_vol=request.idio_vol,
            drift_scale=request.drift_scale,
            persistence=request.persistence,
            beta_low=request.beta_low,
            beta_high=request.beta_high,
            gap_fraction=request.gap_fraction,
        )
        info = run_synth_job(config, request.out_path)
        return SynthResponse(**info)

    @app.post("/report", response_model=ReportResponse)
    async def report(request: ReportRequest) -> ReportResponse:
        config = _build_config(request.config, request.overrides)
        payload = run_report_job(
            request.curve_path, config, out_path=request.output_path
        )
        return ReportResponse(**payload)

    return app


app = create_app()
