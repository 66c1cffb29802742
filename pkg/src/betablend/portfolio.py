"""Target-portfolio construction: quintile long-short books, low-beta
minimum-variance allocations, sleeve combination, and leverage.

A TargetPortfolio maps symbols to signed capital fractions. Its
`leverage` field always equals gross exposure (sum of absolute
weights); `apply_leverage` scales both. Weights omitted from the
mapping are zero.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date as Date
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .exceptions import (
    EngineError,
    NormalizationError,
    SingularCovarianceError,
)

logger = logging.getLogger(__name__)

QUINTILES = 5
DEFAULT_LOW_BETA_COUNT = 25
DEFAULT_BETA_LOOKBACK = 66
DEFAULT_MVP_LOOKBACK = 63  # trailing quarter of daily returns

# Reciprocal condition number below which the covariance solve is refused.
RCOND_FLOOR = 1e-10


@dataclass
class TargetPortfolio:
    """Desired symbol weights for one rebalance date.

    Gross exposure (sum |w|) is stored as `leverage`; net exposure is the
    signed sum. An all-cash sleeve is represented by empty weights.
    """

    as_of: Date
    weights: Dict[str, float]
    leverage: float | None = None

    def __post_init__(self) -> None:
        gross = self.gross_exposure
        if self.leverage is None:
            self.leverage = gross
        elif abs(self.leverage - gross) > 1e-9:
            raise EngineError(
                f"leverage {self.leverage} does not match gross exposure {gross}"
            )

    @property
    def gross_exposure(self) -> float:
        return float(sum(abs(w) for w in self.weights.values()))

    @property
    def net_exposure(self) -> float:
        return float(sum(self.weights.values()))


@dataclass(frozen=True)
class BetaEstimate:
    symbol: str
    beta: float
    lookback: int = DEFAULT_BETA_LOOKBACK


@dataclass
class CovarianceMatrix:
    """Sample covariance of daily returns in per-day units."""

    symbols: List[str]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.symbols)
        if self.matrix.shape != (n, n):
            raise EngineError("covariance shape does not match symbol count")
        if not np.allclose(self.matrix, self.matrix.T, atol=1e-12):
            raise EngineError("covariance matrix is not symmetric")
        if np.any(np.diag(self.matrix) < 0):
            raise EngineError("negative variance on the diagonal")


def assign_quintiles(scores: Mapping[str, float]) -> Dict[str, int]:
    """Split scored symbols into quintiles 1 (best) through 5 (worst).

    When N is not divisible by 5 the earlier quintiles absorb the extra
    members (7 symbols -> sizes 2,2,1,1,1). Ties break by symbol.
    """
    if len(scores) < QUINTILES:
        raise EngineError(f"need at least {QUINTILES} symbols, got {len(scores)}")
    ordered = sorted(scores, key=lambda s: (-scores[s], s))
    n = len(ordered)
    base, extra = divmod(n, QUINTILES)
    out: Dict[str, int] = {}
    idx = 0
    for q in range(1, QUINTILES + 1):
        size = base + (1 if q <= extra else 0)
        for symbol in ordered[idx : idx + size]:
            out[symbol] = q
        idx += size
    return out


def long_short_weights(
    quintiles: Mapping[str, int],
    as_of: Date,
    long_fraction: float = 0.5,
) -> TargetPortfolio:
    """Evenly weighted long top quintile, short bottom quintile.

    `long_fraction` of capital goes long Q1, the remainder short Q5;
    0.5 gives the dollar-neutral book, 0.55 the long-tilted variant.
    Gross exposure is always 1.
    """
    if not 0 < long_fraction < 1:
        raise EngineError(f"long_fraction must be in (0, 1), got {long_fraction}")
    longs = sorted(s for s, q in quintiles.items() if q == 1)
    shorts = sorted(s for s, q in quintiles.items() if q == QUINTILES)
    if not longs or not shorts:
        raise EngineError("empty extreme quintile")
    weights: Dict[str, float] = {}
    for symbol in longs:
        weights[symbol] = long_fraction / len(longs)
    for symbol in shorts:
        weights[symbol] = -(1.0 - long_fraction) / len(shorts)
    return TargetPortfolio(as_of=as_of, weights=weights)


def estimate_beta(
    asset_returns: Sequence[float], benchmark_returns: Sequence[float]
) -> float:
    """Sample covariance with the benchmark over its sample variance."""
    if len(asset_returns) != len(benchmark_returns):
        raise EngineError("return series lengths differ")
    if len(asset_returns) < 2:
        raise EngineError("need at least 2 returns to estimate beta")
    a = np.asarray(asset_returns, dtype=float)
    m = np.asarray(benchmark_returns, dtype=float)
    cov = np.cov(a, m, ddof=1)
    variance = cov[1, 1]
    if variance == 0:
        raise EngineError("benchmark variance is zero")
    return float(cov[0, 1] / variance)


def select_low_beta(
    betas: Sequence[BetaEstimate], count: int = DEFAULT_LOW_BETA_COUNT
) -> List[str]:
    """Symbols of the `count` smallest betas, ties broken by symbol."""
    if len(betas) < count:
        raise EngineError(f"need {count} beta estimates, got {len(betas)}")
    ordered = sorted(betas, key=lambda b: (b.beta, b.symbol))
    return [b.symbol for b in ordered[:count]]


def sample_covariance(
    returns_matrix: Mapping[str, Sequence[float]]
) -> Tuple[CovarianceMatrix, np.ndarray]:
    """Sample covariance (N-1 normalized) and mean-return vector."""
    symbols = sorted(returns_matrix)
    if len(symbols) < 2:
        raise EngineError("need at least 2 symbols for a covariance matrix")
    lengths = {len(returns_matrix[s]) for s in symbols}
    if len(lengths) != 1:
        raise EngineError("return series lengths differ across symbols")
    (n_obs,) = lengths
    if n_obs < 2:
        raise EngineError("need at least 2 observations")
    data = np.array([returns_matrix[s] for s in symbols], dtype=float)
    cov = np.cov(data, ddof=1)
    cov = np.atleast_2d(cov)
    means = data.mean(axis=1)
    return CovarianceMatrix(symbols=symbols, matrix=cov), means


def mvp_weights_from_cov(
    cov: CovarianceMatrix,
    mean_returns: Sequence[float],
    as_of: Date,
    diagonal_loading: bool = False,
) -> TargetPortfolio:
    """Allocation from the covariance matrix: solve V w = R + I, then
    normalize by the sum so net exposure is 1.

    The raw allocation is V^-1 R + V^-1 I computed as a single linear
    solve, never an explicit inverse. Signs are unconstrained, so the
    book can hold both long and short positions. A reciprocal condition
    estimate below 1e-10 raises SingularCovarianceError unless diagonal
    loading is enabled, which adds 1e-6 of the mean variance to the
    diagonal first.
    """
    V = np.array(cov.matrix, dtype=float)
    if diagonal_loading:
        V = V + np.eye(len(cov.symbols)) * 1e-6 * float(np.mean(np.diag(V)))
    norm = np.linalg.norm(V, 2)
    if norm == 0:
        raise SingularCovarianceError(f"zero covariance matrix as of {as_of}")
    rcond = 1.0 / np.linalg.cond(V, 2)
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularCovarianceError(
            f"covariance matrix near-singular as of {as_of} (rcond {rcond:.2e})"
        )
    rhs = np.asarray(mean_returns, dtype=float) + np.ones(len(cov.symbols))
    raw = np.linalg.solve(V, rhs)
    total = float(raw.sum())
    if abs(total) < 1e-12:
        raise NormalizationError(
            f"raw allocation sums to {total:.2e} as of {as_of}; cannot normalize"
        )
    weights = raw / total
    return TargetPortfolio(
        as_of=as_of,
        weights={s: float(w) for s, w in zip(cov.symbols, weights)},
    )


def mvp_weights(
    returns_matrix: Mapping[str, Sequence[float]],
    as_of: Date,
    diagonal_loading: bool = False,
) -> TargetPortfolio:
    """Minimum-variance-style allocation from trailing daily returns."""
    cov, means = sample_covariance(returns_matrix)
    return mvp_weights_from_cov(
        cov, means, as_of=as_of, diagonal_loading=diagonal_loading
    )


def combine(
    momentum: TargetPortfolio, mvp: TargetPortfolio, split: float = 0.5
) -> TargetPortfolio:
    """Per-symbol linear blend: split * momentum + (1 - split) * mvp."""
    if momentum.as_of != mvp.as_of:
        raise EngineError(
            f"sleeve dates differ: {momentum.as_of} vs {mvp.as_of}"
        )
    if not 0 <= split <= 1:
        raise EngineError(f"split must be in [0, 1], got {split}")
    weights: Dict[str, float] = {}
    for symbol in sorted(set(momentum.weights) | set(mvp.weights)):
        w = split * momentum.weights.get(symbol, 0.0) + (1.0 - split) * mvp.weights.get(symbol, 0.0)
        if w != 0.0:
            weights[symbol] = w
    return TargetPortfolio(as_of=momentum.as_of, weights=weights)


def apply_leverage(portfolio: TargetPortfolio, factor: float = 2.0) -> TargetPortfolio:
    """Scale every weight (and thus gross exposure) by `factor` >= 1."""
    if factor < 1:
        raise EngineError(f"leverage factor must be >= 1, got {factor}")
    return TargetPortfolio(
        as_of=portfolio.as_of,
        weights={s: w * factor for s, w in portfolio.weights.items()},
        leverage=portfolio.leverage * factor,
    )


def write_portfolio_csv(path, portfolios: Iterable[TargetPortfolio]) -> None:
    """Audit export, one row per (date, symbol): `date,symbol,weight`."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "symbol", "weight"])
        for portfolio in portfolios:
            for symbol in sorted(portfolio.weights):
                writer.writerow(
                    [
                        portfolio.as_of.isoformat(),
                        symbol,
                        f"{portfolio.weights[symbol]:.12f}",
                    ]
                )
