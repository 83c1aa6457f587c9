"""
Synthetic market generator
Gaussian log returns on a business-day calendar, for demos and tests
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..exceptions import InputDataError
from .marketdata import PricePanel


def default_covariance(num_assets: int, daily_vol: float = 0.01, correlation: float = 0.3) -> np.ndarray:
    """Equicorrelated covariance with a common daily volatility"""
    corr = np.full((num_assets, num_assets), correlation)
    np.fill_diagonal(corr, 1.0)
    return daily_vol ** 2 * corr


def synthetic_prices(
    num_assets: int = 5,
    num_days: int = 500,
    seed: int = 0,
    drift: Union[float, Sequence[float]] = 0.0003,
    cov: Optional[np.ndarray] = None,
    start_price: float = 100.0,
    start_date: str = "2000-01-03",
    tickers: Optional[List[str]] = None,
) -> PricePanel:
    """
    Simulate a price panel from multivariate normal log returns

    Args:
        num_assets: Number of tickers
        num_days: Number of return days; the panel has num_days + 1 price rows
        seed: Generator seed
        drift: Daily mean log return, scalar or per asset
        cov: Daily covariance of log returns (default: 1% vol, 0.3 correlation)
        start_price: Price of every asset on the first row
        start_date: First business day of the calendar
        tickers: Optional labels (default A01, A02, ...)

    Returns:
        PricePanel
    """
    if num_assets < 1 or num_days < 1:
        raise InputDataError("num_assets and num_days must be at least 1")
    mean = np.broadcast_to(np.asarray(drift, dtype=float), (num_assets,))
    sigma = default_covariance(num_assets) if cov is None else np.asarray(cov, dtype=float)
    if sigma.shape != (num_assets, num_assets):
        raise InputDataError(f"Covariance must be {num_assets}x{num_assets}")

    rng = np.random.default_rng(seed)
    returns = rng.multivariate_normal(mean, sigma, size=num_days, method="eigh")
    log_path = np.vstack([np.zeros(num_assets), np.cumsum(returns, axis=0)])
    prices = start_price * np.exp(log_path)

    dates = pd.bdate_range(start=start_date, periods=num_days + 1)
    labels = tickers or [f"A{i + 1:02d}" for i in range(num_assets)]
    if len(labels) != num_assets:
        raise InputDataError("One ticker label per asset is required")
    return PricePanel(
        dates=[d.strftime("%Y-%m-%d") for d in dates],
        tickers=list(labels),
        prices=prices,
    )
