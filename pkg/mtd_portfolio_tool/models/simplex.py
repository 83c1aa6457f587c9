"""
Euclidean projections used by the projected-gradient solvers
"""

from __future__ import annotations

import numpy as np


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """
    Projection onto {x >= 0, sum(x) = total} by the sort-and-threshold rule

    Args:
        v: Point to project (1-D)
        total: Simplex mass

    Returns:
        Closest point of the scaled simplex
    """
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - total
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_box_simplex(v: np.ndarray, lower: np.ndarray, upper: np.ndarray, total: float = 1.0) -> np.ndarray:
    """
    Projection onto {lower <= x <= upper, sum(x) = total}

    The projection is clip(v - theta, lower, upper) for the unique theta making
    the sum equal to total. The sum is piecewise linear and non-increasing in
    theta with kinks at v - upper and v - lower, so theta is found exactly by
    locating the bracketing kinks and interpolating.
    """
    v = np.asarray(v, dtype=float).ravel()
    lower = np.broadcast_to(np.asarray(lower, dtype=float), v.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), v.shape)
    if lower.sum() > total + 1e-12 or upper.sum() < total - 1e-12:
        raise ValueError("Box and simplex constraints do not intersect")

    kinks = np.unique(np.concatenate([v - upper, v - lower]))
    sums = np.clip(v[None, :] - kinks[:, None], lower, upper).sum(axis=1)
    # sums is non-increasing along kinks
    above = np.nonzero(sums >= total)[0]
    if above.size == 0:
        theta = kinks[0]
    else:
        k = above[-1]
        if k == kinks.size - 1 or sums[k] == total:
            theta = kinks[k]
        else:
            s0, s1 = sums[k], sums[k + 1]
            theta = kinks[k] + (s0 - total) * (kinks[k + 1] - kinks[k]) / (s0 - s1)
    x = np.clip(v - theta, lower, upper)

    # absorb rounding on the free coordinates
    drift = total - x.sum()
    if drift != 0.0:
        free = (x > lower) & (x < upper)
        if np.any(free):
            x[free] += drift / np.count_nonzero(free)
            x = np.clip(x, lower, upper)
    return x


def random_simplex_points(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """Uniform draws from the simplex (flat Dirichlet), one per row"""
    return rng.dirichlet(np.ones(dim), size=count)
