"""Request and response schemas for the HTTP service.

The run config itself stays a flat document validated by the engine
(`config_from_dict`), so the CLI and the service cannot drift apart.
The `ConfigModel` here mirrors the fields for OpenAPI purposes and
forwards only the keys the client actually sent.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_path: Optional[str] = None
    benchmark: Optional[str] = None
    symbols: Optional[List[str]] = None
    start: Optional[str] = None
    end: Optional[str] = None
    strategy: Optional[str] = None
    long_fraction: Optional[float] = None
    combo_split: Optional[float] = None
    leverage: Optional[float] = None
    commission_per_share: Optional[float] = None
    slippage_fraction: Optional[float] = None
    financing_rate_annual: Optional[float] = None
    borrow_fee_annual: Optional[float] = None
    range_threshold: Optional[float] = None
    n_rounds: Optional[int] = None
    training_months: Optional[int] = None
    low_beta_count: Optional[int] = None
    beta_lookback: Optional[int] = None
    mvp_lookback: Optional[int] = None
    initial_capital: Optional[float] = None
    fractional_shares: Optional[bool] = None
    mvp_diagonal_loading: Optional[bool] = None
    risk_free_annual: Optional[float] = None
    seed: Optional[int] = None

    def to_payload(self) -> Dict[str, Any]:
        return self.model_dump(exclude_unset=True)


class MetricsModel(BaseModel):
    total_return: float
    annualized_return: float
    sharpe: Optional[float] = None
    sharpe_reason: Optional[str] = None
    beta: float
    max_drawdown: float
    annual_volatility: float
    risk_free_rate: float
    n_days: int
    start: str
    end: str


class WindowModel(BaseModel):
    start: str
    end: str
    n_days: int
    n_rebalances: Optional[int] = None
    n_trades: Optional[int] = None
    wiped_out: Optional[bool] = None


class BacktestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ConfigModel = Field(default_factory=ConfigModel)
    overrides: List[str] = Field(default_factory=list)
    output_dir: str = "out"
    dump_models: bool = False


class BacktestResponse(BaseModel):
    metrics: Optional[MetricsModel]
    config: Dict[str, Any]
    window: WindowModel
    files: Dict[str, str]


class QuintilesRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ConfigModel = Field(default_factory=ConfigModel)
    overrides: List[str] = Field(default_factory=list)
    output_dir: str = "out"


class QuintileEntry(BaseModel):
    final_value: float
    total_return: float


class QuintilesResponse(BaseModel):
    quintiles: Dict[str, QuintileEntry]
    spearman: float
    monotone: bool
    files: Dict[str, str]


class FeaturesRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ConfigModel = Field(default_factory=ConfigModel)
    overrides: List[str] = Field(default_factory=list)
    output_dir: str = "out"
    as_of: Optional[str] = None


class FeaturesResponse(BaseModel):
    as_of: str
    n_symbols: int
    file: str


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_path: str = "data.csv"
    n_symbols: int = 50
    n_days: int = 504
    start: str = "2020-01-01"
    seed: int = 0
    benchmark: str = "BENCH"
    market_vol: float = 0.008
    idio_vol: float = 0.012
    drift_scale: float = 0.003
    persistence: float = 0.85
    beta_low: float = 0.2
    beta_high: float = 1.8
    gap_fraction: float = 0.0


class SynthResponse(BaseModel):
    file: str
    n_symbols: int
    n_days: int
    benchmark: str
    seed: int


class ReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    curve_path: str
    config: ConfigModel = Field(default_factory=ConfigModel)
    overrides: List[str] = Field(default_factory=list)
    output_path: Optional[str] = None


class ReportResponse(BaseModel):
    metrics: MetricsModel
    config: Dict[str, Any]
    window: WindowModel


class HealthResponse(BaseModel):
    status: str
    version: str
