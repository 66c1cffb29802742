"""Exception hierarchy shared by every engine module.

Two broad categories matter to callers: configuration problems (bad
config file, bad CLI override, invalid parameter) and data/runtime
problems (malformed input rows, insufficient history, degenerate
numerics). The CLI maps ConfigError to exit code 2 and every other
EngineError to exit code 1.
"""


class EngineError(Exception):
    """Base class for all errors raised by betablend."""


class ConfigError(EngineError):
    """Invalid configuration value, unknown key, or bad override."""


class ParseError(EngineError):
    """Malformed input row; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DataValidationError(EngineError):
    """Input data violates a declared invariant (names symbol and date)."""


class InsufficientHistoryError(EngineError):
    """A lookback window is longer than the available history."""


class DegenerateRangeError(EngineError):
    """High equals low over a stochastic window; the symbol carries no
    information for that date and must be excluded."""


class DegenerateModelError(EngineError):
    """Classifier trained on a single class or otherwise unusable."""


class EmptyTrainingSetError(EngineError):
    """All candidate training months were filtered out as unstable."""


class SingularCovarianceError(EngineError):
    """Covariance matrix is singular or near-singular for the window."""


class NormalizationError(EngineError):
    """Raw allocation sums to ~0 and cannot be normalized."""


class UndefinedMetricError(EngineError):
    """A statistic is undefined for the given series (e.g. zero-variance
    Sharpe); carries a human-readable reason."""
