"""
Continuous solvers over the box-simplex {lower <= x <= upper, sum(x) = 1}
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence, Tuple

import numpy as np

from ..models.simplex import project_box_simplex

ARMIJO_SLOPE = 1e-4


class QPResult(NamedTuple):
    x: np.ndarray
    value: float
    gap: float  # Frank-Wolfe gap; value + gap bounds the true maximum


def lp_max(g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Maximizer of g.x over the box-simplex: fill the best coordinates first"""
    x = np.array(lower, dtype=float, copy=True)
    remaining = 1.0 - x.sum()
    for i in np.argsort(-g, kind="stable"):
        if remaining <= 0:
            break
        add = min(upper[i] - x[i], remaining)
        x[i] += add
        remaining -= add
    return x


def _qp_value(c: np.ndarray, H: np.ndarray, x: np.ndarray) -> float:
    return float(c @ x - 0.5 * x @ H @ x)


def _kkt_polish(c, H, lower, upper, x, max_rounds: int = 60):
    """
    Primal-dual active-set iteration started from the active set of x

    Solves the equality-constrained KKT system on the free coordinates, then
    moves violated bounds in and released bounds out until the sets repeat.
    Returns None when the iteration does not settle.
    """
    tol = 1e-12 * (1.0 + float(np.max(np.abs(c))))
    at_low = x <= lower + 1e-12
    at_up = (x >= upper - 1e-12) & ~at_low
    for _ in range(max_rounds):
        free = ~(at_low | at_up)
        xb = np.where(at_low, lower, np.where(at_up, upper, 0.0))
        F = np.flatnonzero(free)
        if F.size == 0:
            if abs(xb.sum() - 1.0) > 1e-12:
                return None
            g = c - H @ xb
            lo = g[at_low].max() if at_low.any() else -np.inf
            hi = g[at_up].min() if at_up.any() else np.inf
            return xb if lo <= hi + tol else None
        k = F.size
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = H[np.ix_(F, F)]
        K[:k, k] = 1.0
        K[k, :k] = 1.0
        rhs = np.append(c[F] - H[F] @ xb, 1.0 - xb.sum())
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            return None
        xn = xb.copy()
        xn[F] = sol[:k]
        g = c - H @ xn - sol[k]

        new_low = (free & (xn < lower)) | (at_low & (g <= tol))
        new_up = ((free & (xn > upper)) | (at_up & (g >= -tol))) & ~new_low
        if np.array_equal(new_low, at_low) and np.array_equal(new_up, at_up):
            return xn
        at_low, at_up = new_low, new_up
    return None


def solve_qp(
    c: np.ndarray,
    H: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    start: np.ndarray = None,
    max_iters: int = 500,
) -> QPResult:
    """
    Maximize c.x - x'Hx/2 over the box-simplex for positive semidefinite H

    Accelerated projected gradient locates the active set, a KKT active-set
    polish makes the solution exact, and the Frank-Wolfe gap certifies it.
    """
    c = np.asarray(c, dtype=float)
    H = np.asarray(H, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = c.size
    x = project_box_simplex(np.full(n, 1.0 / n) if start is None else start, lower, upper)

    L = float(np.linalg.eigvalsh(H).max()) if n > 1 else float(H[0, 0])
    L = max(L, 1e-12)
    y = x.copy()
    t = 1.0
    for _ in range(max_iters):
        x_next = project_box_simplex(y + (c - H @ y) / L, lower, upper)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_next + ((t - 1.0) / t_next) * (x_next - x)
        done = np.abs(x_next - x).max() <= 1e-13
        x, t = x_next, t_next
        if done:
            break

    best, best_value = x, _qp_value(c, H, x)
    polished = _kkt_polish(c, H, lower, upper, x)
    if polished is not None:
        polished = project_box_simplex(polished, lower, upper)
        value = _qp_value(c, H, polished)
        if value >= best_value:
            best, best_value = polished, value

    g = c - H @ best
    gap = float(g @ (lp_max(g, lower, upper) - best))
    return QPResult(best, best_value, max(gap, 0.0))


def dinkelbach(
    mu: np.ndarray,
    sigma: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_rounds: int = 100,
) -> Tuple[np.ndarray, float, float]:
    """
    Maximize mu.x / x'Sigma x over the box-simplex, assuming max mu.x > 0

    Each round solves max mu.x - t x'Sigma x exactly and updates t to the ratio
    it attains. Returns (x, ratio, certificate) where certificate bounds
    max mu.x - ratio x'Sigma x from above, so the true maximum ratio is at most
    ratio + certificate / min x'Sigma x.
    """
    x = lp_max(mu, lower, upper)
    t = float(mu @ x) / float(x @ sigma @ x)
    certificate = np.inf
    for _ in range(max_rounds):
        res = solve_qp(mu, 2.0 * t * sigma, lower, upper, start=x)
        certificate = res.value + res.gap
        cand = res.x
        ratio = float(mu @ cand) / float(cand @ sigma @ cand)
        if ratio <= t * (1.0 + 1e-15):
            break
        x, t = cand, ratio
    return x, t, max(certificate, 0.0)


def local_ascent(
    value: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    lower: np.ndarray,
    upper: np.ndarray,
    start: np.ndarray,
    tol: float = 1e-12,
    max_iters: int = 5000,
) -> Tuple[np.ndarray, float]:
    """Projected gradient ascent with Armijo backtracking from one start"""
    x = project_box_simplex(start, lower, upper)
    f = value(x)
    step = 1.0
    for _ in range(max_iters):
        g = gradient(x)
        if np.linalg.norm(x - project_box_simplex(x + g, lower, upper)) <= tol:
            break
        while True:
            cand = project_box_simplex(x + step * g, lower, upper)
            fc = value(cand)
            if fc >= f + ARMIJO_SLOPE * float(g @ (cand - x)):
                break
            step *= 0.5
            if step < 1e-24:
                return x, f
        if np.array_equal(cand, x):
            break
        x, f = cand, fc
        step = min(step * 2.0, 1e8)
    return x, f


def pattern_search(
    values: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    step: float,
    min_step: float = 1e-10,
) -> Tuple[np.ndarray, float]:
    """
    Pairwise mass-transfer refinement on a shrinking grid

    values maps a (rows, k) array of candidate portfolios to their objectives.
    The best improving transfer of `step` from one coordinate to another is
    taken; the step halves when none improves.
    """
    x = np.array(x, dtype=float, copy=True)
    f = float(values(x[None, :])[0])
    k = x.size
    if k < 2:
        return x, f
    I, J = np.nonzero(~np.eye(k, dtype=bool))
    h = step
    while h >= min_step:
        ok = (x[I] + h <= upper[I]) & (x[J] - h >= lower[J])
        if np.any(ok):
            rows = np.arange(int(ok.sum()))
            C = np.repeat(x[None, :], rows.size, axis=0)
            C[rows, I[ok]] += h
            C[rows, J[ok]] -= h
            vals = values(C)
            b = int(np.argmax(vals))
            if vals[b] > f + 1e-15 * max(1.0, abs(f)):
                x, f = C[b], float(vals[b])
                continue
        h *= 0.5
    return x, f


def best_of(candidates: Sequence[Tuple[np.ndarray, float]]) -> Tuple[np.ndarray, float]:
    """Highest value; earlier candidates win exact ties"""
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[1] > best[1]:
            best = cand
    return best
