"""
MTD Network Portfolio Tool
Directed financial networks from mixture transition distribution models, their
assortativity, and assortativity-penalized portfolio backtests
"""

__version__ = "0.1.0"

from .backtest import run_backtest
from .config import BacktestConfig, load_config
from .data import load_prices, log_returns, synthetic_prices
from .models import fit_mtd
from .networks import compute_assortativity, from_lambda
from .portfolio import PenaltySpec, estimate_moments, max_quadratic_utility, max_sharpe

__all__ = [
    "__version__",
    "BacktestConfig",
    "load_config",
    "load_prices",
    "log_returns",
    "synthetic_prices",
    "fit_mtd",
    "from_lambda",
    "compute_assortativity",
    "PenaltySpec",
    "estimate_moments",
    "max_quadratic_utility",
    "max_sharpe",
    "run_backtest",
]
