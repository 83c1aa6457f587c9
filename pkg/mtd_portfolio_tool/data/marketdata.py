"""
Market data loading and preparation
Price panels, log returns, state discretization and rolling window layout
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..exceptions import DegenerateDataError, InputDataError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PricePanel:
    """Aligned daily closing prices (T days x n assets)"""
    dates: List[str]
    tickers: List[str]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "prices", _frozen(np.asarray(self.prices, dtype=float)))
        if self.prices.shape != (len(self.dates), len(self.tickers)):
            raise InputDataError(
                f"Price matrix shape {self.prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if np.any(~np.isfinite(self.prices)) or np.any(self.prices <= 0):
            raise InputDataError("Prices must be finite and strictly positive")

    @property
    def num_days(self) -> int:
        return len(self.dates)

    @property
    def num_assets(self) -> int:
        return len(self.tickers)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.prices, index=pd.Index(self.dates, name="date"), columns=self.tickers)


@dataclass(frozen=True)
class ReturnPanel:
    """Daily log returns; one row fewer than the price panel it came from"""
    dates: List[str]
    tickers: List[str]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "returns", _frozen(np.asarray(self.returns, dtype=float)))
        if self.returns.shape != (len(self.dates), len(self.tickers)):
            raise InputDataError("Return matrix shape does not match dates x tickers")
        if not np.all(np.isfinite(self.returns)):
            raise InputDataError("Returns must be finite")

    @property
    def num_days(self) -> int:
        return len(self.dates)

    @property
    def num_assets(self) -> int:
        return len(self.tickers)

    def slice(self, rows: range) -> "ReturnPanel":
        """Sub-panel over a contiguous row range"""
        return ReturnPanel(
            dates=self.dates[rows.start:rows.stop],
            tickers=list(self.tickers),
            returns=self.returns[rows.start:rows.stop],
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.returns, index=pd.Index(self.dates, name="date"), columns=self.tickers)


@dataclass(frozen=True)
class DiscretizationScheme:
    """How returns were mapped onto states; quantile edges are per asset"""
    kind: Literal["sign", "quantile"] = "sign"
    num_states: int = 3
    zero_band: float = 0.0
    edges: Optional[np.ndarray] = None  # (n assets, num_states - 1) for quantile

    def __post_init__(self):
        if self.kind not in ("sign", "quantile"):
            raise InputDataError(f"Unsupported state scheme: {self.kind}")
        if self.kind == "sign" and self.num_states != 3:
            raise InputDataError("The sign scheme always has 3 states")
        if self.num_states < 2:
            raise InputDataError("At least 2 states are required")
        if self.zero_band < 0:
            raise InputDataError("zero_band must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_states": self.num_states,
            "zero_band": self.zero_band,
            "edges": None if self.edges is None else np.asarray(self.edges).tolist(),
        }


@dataclass(frozen=True)
class StatePanel:
    """Categorical state sequences, one column per asset, values in [0, num_states)"""
    dates: List[str]
    tickers: List[str]
    states: np.ndarray
    num_states: int
    scheme: Optional[DiscretizationScheme] = None

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 2 or states.shape != (len(self.dates), len(self.tickers)):
            raise InputDataError("State matrix shape does not match dates x tickers")
        if not np.issubdtype(states.dtype, np.integer):
            if not np.all(np.equal(np.mod(states, 1), 0)):
                raise InputDataError("States must be integer labels")
        states = states.astype(np.int64)
        if self.num_states < 2:
            raise InputDataError("At least 2 states are required")
        if states.size and (states.min() < 0 or states.max() >= self.num_states):
            raise InputDataError(f"States must lie in [0, {self.num_states})")
        object.__setattr__(self, "states", _frozen(states))

    @property
    def num_days(self) -> int:
        return len(self.dates)

    @property
    def num_assets(self) -> int:
        return len(self.tickers)


@dataclass(frozen=True)
class WindowPair:
    """One rolling step: in-sample rows followed immediately by out-of-sample rows"""
    index: int
    in_sample: range
    out_sample: range

    def __post_init__(self):
        if self.in_sample.stop != self.out_sample.start:
            raise InputDataError("Out-of-sample range must follow the in-sample range")


def load_prices(path: Union[str, Path], min_assets: int = 2) -> PricePanel:
    """
    Load a daily closing-price CSV

    The first column holds ISO dates (YYYY-MM-DD), every other column one ticker.
    Rows with a missing, non-numeric or non-positive price are dropped.

    Args:
        path: CSV file path
        min_assets: Minimum number of ticker columns required

    Returns:
        Aligned PricePanel
    """
    csv_path = Path(path)
    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputDataError(f"Failed to read price file {csv_path}: {e}")

    if frame.shape[1] < 1 + min_assets:
        raise InputDataError(
            f"Price file {csv_path} needs a date column and at least {min_assets} asset column(s)"
        )

    date_col = frame.columns[0]
    tickers = [str(c).strip() for c in frame.columns[1:]]
    if len(set(tickers)) != len(tickers):
        raise InputDataError(f"Duplicate ticker columns in {csv_path}")

    try:
        dates = pd.to_datetime(frame[date_col].str.strip(), format="%Y-%m-%d")
    except (ValueError, TypeError) as e:
        raise InputDataError(f"Dates in {csv_path} must be ISO-8601 YYYY-MM-DD: {e}")

    values = frame.iloc[:, 1:].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values.columns = tickers
    values.index = pd.DatetimeIndex(dates)

    valid = values.notna().all(axis=1) & (values > 0).all(axis=1)
    dropped = int((~valid).sum())
    values = values[valid]
    if dropped:
        logger.info(f"Dropped {dropped} row(s) with missing or non-positive prices from {csv_path.name}")

    values = values.sort_index()
    if values.index.has_duplicates:
        raise InputDataError(f"Duplicate dates in {csv_path}")
    if len(values) < 2:
        raise InputDataError(f"Price file {csv_path} retains fewer than 2 valid rows")

    return PricePanel(
        dates=[d.strftime("%Y-%m-%d") for d in values.index],
        tickers=tickers,
        prices=values.to_numpy(dtype=float),
    )


def write_prices(panel: PricePanel, path: Union[str, Path]) -> Path:
    """Write a panel in the input CSV layout"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    panel.to_frame().to_csv(out, float_format="%.17g")
    return out


def log_returns(panel: PricePanel) -> ReturnPanel:
    """r_t = ln(P_t / P_{t-1}) for every asset"""
    if panel.num_days < 2:
        raise InputDataError("At least 2 price rows are needed for returns")
    returns = np.diff(np.log(panel.prices), axis=0)
    return ReturnPanel(dates=list(panel.dates[1:]), tickers=list(panel.tickers), returns=returns)


def discretize(panel: ReturnPanel, scheme: DiscretizationScheme) -> StatePanel:
    """
    Map returns onto a finite state space

    sign: r < -band -> 0, |r| <= band -> 1, r > band -> 2
    quantile: each asset's returns split into num_states equal-mass bins at its
    own empirical quantiles (edges stored in the returned scheme)

    Args:
        panel: Returns to discretize (normally one in-sample window)
        scheme: Discretization descriptor

    Returns:
        StatePanel of the same shape
    """
    r = panel.returns
    if scheme.kind == "sign":
        band = scheme.zero_band
        states = np.where(r < -band, 0, np.where(r > band, 2, 1))
        fitted = scheme
    else:
        z = scheme.num_states
        probs = np.arange(1, z) / z
        states = np.empty(r.shape, dtype=np.int64)
        edges = np.empty((panel.num_assets, z - 1))
        for a in range(panel.num_assets):
            column = r[:, a]
            if np.unique(column).size < z:
                raise DegenerateDataError(
                    f"Asset {panel.tickers[a]} has fewer than {z} distinct returns; "
                    f"cannot form {z} quantile bins"
                )
            edges[a] = np.quantile(column, probs)
            states[:, a] = np.searchsorted(edges[a], column, side="right")
        fitted = DiscretizationScheme(kind="quantile", num_states=z, zero_band=scheme.zero_band, edges=edges)

    return StatePanel(
        dates=list(panel.dates),
        tickers=list(panel.tickers),
        states=states,
        num_states=scheme.num_states,
        scheme=fitted,
    )


def rolling_windows(num_rows: int, in_len: int, out_len: int, step: int) -> List[WindowPair]:
    """
    Lay out rolling in-sample / out-of-sample windows

    Windows start at 0, step, 2*step, ... and are emitted only when both parts fit,
    giving floor((num_rows - in_len - out_len) / step) + 1 windows.
    """
    if step < 1 or in_len < 1 or out_len < 1:
        raise InputDataError("in_len, out_len and step must all be at least 1")
    if num_rows < in_len + out_len:
        raise InputDataError(
            f"{num_rows} rows cannot hold a {in_len}-row in-sample and {out_len}-row out-of-sample window"
        )
    count = (num_rows - in_len - out_len) // step + 1
    windows = []
    for k in range(count):
        start = k * step
        windows.append(WindowPair(
            index=k,
            in_sample=range(start, start + in_len),
            out_sample=range(start + in_len, start + in_len + out_len),
        ))
    return windows
