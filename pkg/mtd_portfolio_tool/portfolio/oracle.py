"""
Brute-force verification oracle: enumerate every feasible support

Each support is solved on its own with projected gradient ascent from the
barycenter followed by grid refinement. Nothing here shares the solver used by
branch-and-bound, so the two can be checked against each other.
"""

from __future__ import annotations

import itertools
import math
from typing import Tuple

import numpy as np

from ..exceptions import InfeasiblePortfolioError, InputDataError
from ..models.simplex import project_box_simplex
from .problem import MarketMoments, Objective, PenaltySpec, PortfolioSolution, better, penalty_value

MAX_ORACLE_ASSETS = 12
ASCENT_ITERS = 5000
MIN_GRID_STEP = 1e-12


class _SupportObjective:
    """Objective restricted to one support; the simple penalty is added by the caller"""

    def __init__(self, mu, sigma, rho, objective: Objective, delta: float, stdev: bool):
        self.mu = mu
        self.sigma = sigma
        self.rho = rho
        self.objective = objective
        self.delta = delta
        self.stdev = stdev

    def rows(self, X: np.ndarray) -> np.ndarray:
        N = X @ self.mu
        D = np.sum((X @ self.sigma) * X, axis=1)
        if self.objective == "utility":
            base = N - 0.5 * self.delta * D
        elif self.stdev:
            base = N / np.sqrt(D)
        else:
            base = N / D
        return base - X @ self.rho

    def value(self, x: np.ndarray) -> float:
        return float(self.rows(x[None, :])[0])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        Sx = self.sigma @ x
        if self.objective == "utility":
            return self.mu - self.delta * Sx - self.rho
        N, D = float(self.mu @ x), float(x @ Sx)
        if self.stdev:
            return self.mu / math.sqrt(D) - N * Sx / D ** 1.5 - self.rho
        return self.mu / D - 2.0 * N * Sx / D ** 2 - self.rho


def _ascend(f: _SupportObjective, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, float]:
    x = project_box_simplex(np.full(lower.size, 1.0 / lower.size), lower, upper)
    fx = f.value(x)
    step = 1.0
    for _ in range(ASCENT_ITERS):
        g = f.gradient(x)
        while True:
            cand = project_box_simplex(x + step * g, lower, upper)
            fc = f.value(cand)
            if fc >= fx + 1e-4 * float(g @ (cand - x)):
                break
            step *= 0.5
            if step < 1e-30:
                return x, fx
        moved = float(np.abs(cand - x).max())
        if fc >= fx:
            x, fx = cand, fc
        if moved <= 1e-14:
            break
        step = min(step * 2.0, 1e12)
    return x, fx


def _refine(f: _SupportObjective, x: np.ndarray, fx: float, lower: np.ndarray, upper: np.ndarray,
            h: float) -> Tuple[np.ndarray, float]:
    """Move mass h between pairs of coordinates while that helps, then halve h"""
    k = x.size
    pairs = [(i, j) for i in range(k) for j in range(k) if i != j]
    while h >= MIN_GRID_STEP:
        moves = [(i, j) for i, j in pairs if x[i] + h <= upper[i] and x[j] - h >= lower[j]]
        improved = False
        if moves:
            X = np.repeat(x[None, :], len(moves), axis=0)
            for r, (i, j) in enumerate(moves):
                X[r, i] += h
                X[r, j] -= h
            values = f.rows(X)
            b = int(np.argmax(values))
            if values[b] > fx:
                x, fx, improved = X[b], float(values[b]), True
        if not improved:
            h /= 2.0
    return x, fx


def brute_force_search(
    moments: MarketMoments,
    spec: PenaltySpec,
    objective: Objective,
    gamma: float,
    delta: float = 1.0,
    resolution: int = 100,
    stdev: bool = False,
) -> PortfolioSolution:
    """
    Solve the continuous problem on every nonempty support of size <= floor(1 / gamma)

    The grid refinement starts at the free mass (1 - |S| gamma) divided by
    `resolution`. diagnostics["runner_up"] holds the best objective over the
    other supports (-inf when there is only one).
    """
    n = moments.n
    if n > MAX_ORACLE_ASSETS:
        raise InputDataError(f"Brute force is limited to {MAX_ORACLE_ASSETS} assets, got {n}")
    if resolution < 50:
        raise InputDataError("resolution must be at least 50")
    if objective not in ("utility", "sharpe"):
        raise InputDataError(f"Unknown objective {objective!r}")
    if spec.rho.size != n:
        raise InputDataError("Penalty vector length must equal the number of assets")
    if gamma > 1:
        raise InfeasiblePortfolioError(f"gamma = {gamma} > 1 leaves no feasible portfolio")
    if gamma <= 0:
        raise InputDataError("gamma must be positive")

    form = spec.effective_form
    rho = spec.scale * spec.rho if form != "none" else np.zeros(n)
    max_support = min(n, int(math.floor(1.0 / gamma + 1e-12)))

    best_value, best_support, best_x = -np.inf, None, None
    values = []
    for size in range(1, max_support + 1):
        for support in itertools.combinations(range(n), size):
            idx = np.array(support)
            f = _SupportObjective(moments.mu[idx], moments.sigma[np.ix_(idx, idx)],
                                  rho[idx] if form == "weighted" else np.zeros(size),
                                  objective, delta, stdev)
            lower = np.full(size, float(gamma))
            upper = np.ones(size)
            if size == 1:
                xs, fs = np.ones(1), f.value(np.ones(1))
            else:
                xs, fs = _ascend(f, lower, upper)
                free_mass = 1.0 - size * gamma
                if free_mass > MIN_GRID_STEP:
                    xs, fs = _refine(f, xs, fs, lower, upper, free_mass / resolution)
            if form == "simple":
                fs -= float(rho[idx].sum())
            values.append(fs)
            if better(fs, support, n, best_value, best_support):
                best_value, best_support = fs, support
                best_x = np.zeros(n)
                best_x[idx] = xs

    y = np.zeros(n, dtype=int)
    y[list(best_support)] = 1
    others = sorted(values, reverse=True)
    return PortfolioSolution(
        x=best_x,
        y=y,
        objective=float(best_value),
        R=penalty_value(spec, best_x, y),
        status="optimal",
        nodes=len(values),
        diagnostics={"runner_up": float(others[1]) if len(others) > 1 else -np.inf},
    )
