"""Deterministic backtests for two smart-beta sleeves and their blend.

The package ranks a stock universe each month with boosted decision
stumps over momentum and volume features, shorts the bottom quintile
against the top, pairs that with a minimum-variance portfolio of
low-beta names, and accounts for the result bar by bar with explicit
transaction costs.
"""

from .exceptions import (
    ConfigError,
    DataValidationError,
    EngineError,
    InsufficientHistoryError,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataValidationError",
    "EngineError",
    "InsufficientHistoryError",
    "ParseError",
    "__version__",
]
