"""Price loading, returns, discretization and synthetic markets"""

from .marketdata import (
    DiscretizationScheme,
    PricePanel,
    ReturnPanel,
    StatePanel,
    WindowPair,
    discretize,
    load_prices,
    log_returns,
    rolling_windows,
    write_prices,
)
from .synthetic import default_covariance, synthetic_prices

__all__ = [
    "DiscretizationScheme",
    "PricePanel",
    "ReturnPanel",
    "StatePanel",
    "WindowPair",
    "discretize",
    "load_prices",
    "log_returns",
    "rolling_windows",
    "write_prices",
    "default_covariance",
    "synthetic_prices",
]
