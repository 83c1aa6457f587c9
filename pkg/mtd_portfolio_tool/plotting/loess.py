"""
Loess smoothing for the assortativity profile plots
Local linear regression with tricube weights over the nearest span-fraction of points
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..exceptions import InputDataError

Z_95 = 1.96
MIN_POINTS = 5


@dataclass(frozen=True)
class PlotProfile:
    """Smoothed curve on an increasing x grid with its pointwise 95% band"""
    x: np.ndarray
    y_smoothed: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray
    key: Dict[str, str] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "x": self.x,
            "y_smoothed": self.y_smoothed,
            "band_low": self.band_low,
            "band_high": self.band_high,
        })
        for name, value in reversed(list(self.key.items())):
            frame.insert(0, name, value)
        return frame


def tricube(u: np.ndarray) -> np.ndarray:
    u = np.clip(np.abs(u), 0.0, 1.0)
    return (1.0 - u ** 3) ** 3


def _local_fit(x: np.ndarray, y: np.ndarray, x0: float, k: int):
    """Fitted value and its standard error at x0 from the k nearest points"""
    dist = np.abs(x - x0)
    nearest = np.argsort(dist, kind="stable")[:k]
    d = dist[nearest]
    h = d.max()
    xs, ys = x[nearest], y[nearest]

    if h > 0:
        # the k-th neighbour keeps a small positive weight
        w = tricube(d / (h * (1.0 + 1e-6)))
    else:
        w = np.ones(k)

    centred = xs - x0
    if np.ptp(centred) > 0:
        X = np.column_stack([np.ones(k), centred])
    else:
        X = np.ones((k, 1))
    sw = np.sqrt(w)
    # rows of B map ys onto the weighted least-squares coefficients
    B = np.linalg.pinv(X * sw[:, None]) * sw
    l = B[0]
    fit = float(l @ ys)

    hat = X @ B
    resid = ys - hat @ ys
    # E[w . resid^2] = sigma^2 sum_i w_i |row i of (I - hat)|^2 for homoscedastic noise
    denom = float(w @ ((np.eye(k) - hat) ** 2).sum(axis=1))
    s2 = float(w @ resid ** 2) / denom if denom > 1e-12 * w.sum() else 0.0
    se = math.sqrt(max(s2, 0.0) * float(l @ l))
    return fit, se


def loess_smooth(
    x: Sequence[float],
    y: Sequence[float],
    span: float = 0.75,
    grid: int = 100,
    key: Optional[Dict[str, str]] = None,
) -> PlotProfile:
    """
    Degree-1 loess evaluated on an evenly spaced grid over [min x, max x]

    Args:
        x, y: Scatter points, any order
        span: Fraction of the points used in each local fit, in (0, 1]
        grid: Number of evaluation points (collapses to 1 when x has no spread)
        key: Series labels carried into the output

    Returns:
        PlotProfile with band = fit -/+ 1.96 standard errors
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputDataError("x and y must have the same length")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise InputDataError("Loess input contains non-finite values")
    n = x.size
    if n < MIN_POINTS:
        raise InputDataError(f"Loess needs at least {MIN_POINTS} points, got {n}")
    if not 0.0 < span <= 1.0:
        raise InputDataError("span must lie in (0, 1]")
    if span * n < 3:
        raise InputDataError(f"span * count must be at least 3 (got {span * n:.2f})")
    if grid < 1:
        raise InputDataError("grid must be at least 1")

    k = min(n, int(math.ceil(span * n)))
    lo, hi = float(x.min()), float(x.max())
    points = np.linspace(lo, hi, grid) if hi > lo else np.array([lo])

    fits = np.empty(points.size)
    errors = np.empty(points.size)
    for g, x0 in enumerate(points):
        fits[g], errors[g] = _local_fit(x, y, x0, k)

    return PlotProfile(
        x=points,
        y_smoothed=fits,
        band_low=fits - Z_95 * errors,
        band_high=fits + Z_95 * errors,
        key=dict(key or {}),
    )


def profiles_frame(profiles: Iterable[PlotProfile]) -> pd.DataFrame:
    frames: List[pd.DataFrame] = [p.to_frame() for p in profiles]
    if not frames:
        raise InputDataError("No profile to write")
    return pd.concat(frames, ignore_index=True)


def write_profiles(profiles: Iterable[PlotProfile], path: Union[str, Path]) -> Path:
    """Long CSV: one block of grid rows per profile, key columns first"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    profiles_frame(profiles).to_csv(out, index=False, float_format="%.17g")
    return out
