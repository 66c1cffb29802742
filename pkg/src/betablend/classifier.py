"""Boosted decision-stump classifier over rank features.

The monthly pipeline labels each stock as next-month outperformer (+1)
or underperformer (-1) relative to the cross-sectional median, drops
months whose benchmark range marks them as unstable, then trains
discrete AdaBoost with depth-1 stumps. Stump search and tie-breaking
are fully deterministic so identical inputs always produce identical
models.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from statistics import median
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .exceptions import (
    DegenerateModelError,
    EmptyTrainingSetError,
    EngineError,
)
from .indicators import FEATURE_NAMES, FeatureMatrix
from .market_data import PriceSeries, monthly_range

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

# Alpha assigned to a stump with zero weighted error; keeps the vote
# finite while still dominating every regular round.
PERFECT_ALPHA = 10.0

DEFAULT_ROUNDS = 50
DEFAULT_RANGE_THRESHOLD = 0.17


@dataclass(frozen=True)
class TrainingExample:
    """One (rank vector, outcome) pair with its boosting weight."""

    features: Tuple[float, ...]
    label: int  # +1 outperformer, -1 underperformer
    weight: float = 0.0


@dataclass(frozen=True)
class DecisionStump:
    """Threshold test on a single feature.

    polarity +1 predicts +1 when feature >= threshold;
    polarity -1 predicts +1 when feature <= threshold.
    A value exactly on the threshold is on the +1 side either way.
    """

    feature_index: int
    threshold: float
    polarity: int

    def predict_one(self, x: Sequence[float]) -> int:
        value = x[self.feature_index]
        if self.polarity == 1:
            return 1 if value >= self.threshold else -1
        return 1 if value <= self.threshold else -1

    def predict(self, X: np.ndarray) -> np.ndarray:
        column = X[:, self.feature_index]
        if self.polarity == 1:
            return np.where(column >= self.threshold, 1, -1)
        return np.where(column <= self.threshold, 1, -1)


@dataclass
class AdaBoostModel:
    """Weighted vote of decision stumps."""

    stumps: List[DecisionStump]
    alphas: List[float]
    n_rounds: int
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.stumps) != len(self.alphas):
            raise DegenerateModelError("stumps and alphas differ in length")
        for alpha in self.alphas:
            if not np.isfinite(alpha):
                raise DegenerateModelError(f"non-finite alpha {alpha}")

    @property
    def arity(self) -> int:
        return len(self.feature_names)

    def score_one(self, x: Sequence[float]) -> float:
        if len(x) != self.arity:
            raise EngineError(
                f"feature arity {len(x)} does not match model arity {self.arity}"
            )
        return sum(a * s.predict_one(x) for a, s in zip(self.alphas, self.stumps))

    def training_accuracy(self, X: np.ndarray, y: np.ndarray) -> float:
        scores = np.zeros(len(y))
        for alpha, stump in zip(self.alphas, self.stumps):
            scores += alpha * stump.predict(X)
        predictions = np.where(scores >= 0, 1, -1)
        return float(np.mean(predictions == y))


def build_training_set(
    features_by_month: Mapping[Tuple[int, int], FeatureMatrix],
    next_month_returns: Mapping[Tuple[int, int], Mapping[str, float]],
    benchmark: PriceSeries,
    range_threshold: float = DEFAULT_RANGE_THRESHOLD,
) -> List[TrainingExample]:
    """Labeled examples from trailing feature snapshots and realized returns.

    A month is keyed by the period its label return accrues over: the
    feature matrix is the snapshot at that month's start and
    next_month_returns[month] holds each stock's return across the month.
    Months whose benchmark range exceeds `range_threshold` are dropped
    from learning entirely. Labels: +1 when the stock's return strictly
    beats that month's cross-sectional median, else -1. Weights are
    uniform over the pooled examples.
    """
    examples: List[TrainingExample] = []
    for month in sorted(features_by_month):
        rng = monthly_range(benchmark, month)
        if rng > range_threshold:
            logger.info(
                "month %04d-%02d excluded from training: benchmark range %.3f > %.3f",
                month[0], month[1], rng, range_threshold,
            )
            continue
        matrix = features_by_month[month]
        returns = next_month_returns[month]
        symbols = [s for s in matrix.symbols if s in returns]
        if not symbols:
            continue
        cutoff = median(returns[s] for s in symbols)
        for symbol in symbols:
            label = 1 if returns[symbol] > cutoff else -1
            examples.append(
                TrainingExample(features=matrix.rank_vector(symbol), label=label)
            )
    if not examples:
        raise EmptyTrainingSetError(
            "all candidate months were filtered out or empty"
        )
    weight = 1.0 / len(examples)
    return [
        TrainingExample(features=e.features, label=e.label, weight=weight)
        for e in examples
    ]


def _best_stump(
    X: np.ndarray, y: np.ndarray, w: np.ndarray
) -> Tuple[DecisionStump, float]:
    """Weight-minimizing stump over all (feature, threshold, polarity) candidates.

    Thresholds are the unique values of each feature column. Ties break
    by ascending (feature_index, threshold, polarity), so the argmin is
    deterministic regardless of evaluation order.
    """
    n, d = X.shape
    best: Tuple[DecisionStump, float] | None = None
    is_pos = y == 1
    for feature in range(d):
        column = X[:, feature]
        order = np.argsort(column, kind="stable")
        sorted_vals = column[order]
        sorted_w = w[order]
        sorted_pos = is_pos[order]
        unique_vals, first_idx = np.unique(sorted_vals, return_index=True)

        w_pos = np.where(sorted_pos, sorted_w, 0.0)
        w_neg = np.where(~sorted_pos, sorted_w, 0.0)
        # prefix[i] = weight mass strictly before sorted position i
        prefix_pos = np.concatenate(([0.0], np.cumsum(w_pos)))
        prefix_neg = np.concatenate(([0.0], np.cumsum(w_neg)))
        total_pos = prefix_pos[-1]
        total_neg = prefix_neg[-1]

        for t_index, threshold in enumerate(unique_vals):
            start = first_idx[t_index]
            end = first_idx[t_index + 1] if t_index + 1 < len(unique_vals) else n
            # polarity -1: +1 side is value <= threshold
            err_minus = prefix_neg[end] + (total_pos - prefix_pos[end])
            # polarity +1: +1 side is value >= threshold
            err_plus = (total_neg - prefix_neg[start]) + prefix_pos[start]
            for polarity, err in ((-1, err_minus), (1, err_plus)):
                if best is None or err < best[1]:
                    stump = DecisionStump(
                        feature_index=feature,
                        threshold=float(threshold),
                        polarity=polarity,
                    )
                    best = (stump, float(err))
    assert best is not None
    return best


def train_adaboost(
    examples: Sequence[TrainingExample], n_rounds: int = DEFAULT_ROUNDS
) -> AdaBoostModel:
    """Discrete AdaBoost over decision stumps.

    Per round: pick the stump minimizing weighted error, set
    alpha = 0.5*ln((1-err)/err), reweight misclassified examples up and
    renormalize. Stops early when the best stump is no better than
    chance (err >= 0.5, stump discarded) or perfect (err == 0, stump
    kept with a capped alpha).
    """
    if not examples:
        raise DegenerateModelError("no training examples")
    labels = {e.label for e in examples}
    if labels != {-1, 1}:
        raise DegenerateModelError(f"need both classes, got labels {sorted(labels)}")

    X = np.array([e.features for e in examples], dtype=float)
    y = np.array([e.label for e in examples], dtype=int)
    w = np.array([e.weight for e in examples], dtype=float)
    if w.sum() <= 0:
        w = np.full(len(examples), 1.0 / len(examples))
    else:
        w = w / w.sum()

    stumps: List[DecisionStump] = []
    alphas: List[float] = []
    for round_index in range(n_rounds):
        stump, err = _best_stump(X, y, w)
        if err >= 0.5:
            logger.debug(
                "round %d: best stump error %.4f >= 0.5, stopping", round_index, err
            )
            break
        if err == 0.0:
            stumps.append(stump)
            alphas.append(PERFECT_ALPHA)
            break
        alpha = 0.5 * np.log((1.0 - err) / err)
        stumps.append(stump)
        alphas.append(float(alpha))
        predictions = stump.predict(X)
        w = w * np.exp(-alpha * y * predictions)
        w = w / w.sum()

    arity = X.shape[1]
    names = FEATURE_NAMES if arity == len(FEATURE_NAMES) else tuple(
        f"f{i}" for i in range(arity)
    )
    return AdaBoostModel(
        stumps=stumps,
        alphas=alphas,
        n_rounds=n_rounds,
        feature_names=names,
        metadata={"n_examples": len(examples)},
    )


def predict_scores(
    model: AdaBoostModel, features: FeatureMatrix
) -> Dict[str, float]:
    """Signed ensemble margin per symbol; higher means stronger outperformance."""
    if not model.stumps or all(a == 0.0 for a in model.alphas):
        logger.warning("degenerate model (no effective stumps); all scores are 0")
        return {symbol: 0.0 for symbol in features.symbols}
    return {
        symbol: model.score_one(features.rank_vector(symbol))
        for symbol in features.symbols
    }


def cross_validate(
    examples: Sequence[TrainingExample],
    folds: int = 5,
    n_rounds: int = DEFAULT_ROUNDS,
    seed: int = 0,
) -> float:
    """Mean held-out accuracy over stratified folds.

    Fold assignment comes from a seeded shuffle of each class's indices
    dealt round-robin, so results are reproducible.
    """
    if len(examples) < folds:
        raise EngineError(f"{len(examples)} examples cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    pos = [i for i, e in enumerate(examples) if e.label == 1]
    neg = [i for i, e in enumerate(examples) if e.label != 1]
    rng.shuffle(pos)
    rng.shuffle(neg)
    fold_of = {}
    for pool in (pos, neg):
        for j, idx in enumerate(pool):
            fold_of[idx] = j % folds

    accuracies = []
    for fold in range(folds):
        train = [e for i, e in enumerate(examples) if fold_of[i] != fold]
        test = [e for i, e in enumerate(examples) if fold_of[i] == fold]
        if not test:
            continue
        model = train_adaboost(train, n_rounds=n_rounds)
        hits = 0
        for example in test:
            score = model.score_one(example.features)
            predicted = 1 if score >= 0 else -1
            hits += int(predicted == example.label)
        accuracies.append(hits / len(test))
    return float(np.mean(accuracies))


def model_to_dict(model: AdaBoostModel) -> Dict[str, object]:
    return {
        "version": MODEL_FORMAT_VERSION,
        "feature_names": list(model.feature_names),
        "n_rounds": model.n_rounds,
        "stumps": [
            {
                "feature_index": s.feature_index,
                "threshold": s.threshold,
                "polarity": s.polarity,
            }
            for s in model.stumps
        ],
        "alphas": list(model.alphas),
        "metadata": model.metadata,
    }


def model_from_dict(payload: Mapping[str, object]) -> AdaBoostModel:
    version = payload.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise EngineError(f"unsupported model format version {version!r}")
    stumps = [
        DecisionStump(
            feature_index=int(s["feature_index"]),
            threshold=float(s["threshold"]),
            polarity=int(s["polarity"]),
        )
        for s in payload["stumps"]
    ]
    return AdaBoostModel(
        stumps=stumps,
        alphas=[float(a) for a in payload["alphas"]],
        n_rounds=int(payload["n_rounds"]),
        feature_names=tuple(payload["feature_names"]),
        metadata=dict(payload.get("metadata", {})),
    )


def save_model(path, model: AdaBoostModel) -> None:
    with open(path, "w") as handle:
        json.dump(model_to_dict(model), handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_model(path) -> AdaBoostModel:
    with open(path) as handle:
        return model_from_dict(json.load(handle))
