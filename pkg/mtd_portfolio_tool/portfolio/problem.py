"""
Portfolio instances and their objective
Moments, penalty descriptor, solution record and the per-support / relaxed subproblems
used by branch-and-bound and the heuristic
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Tuple

import numpy as np

from ..exceptions import InfeasiblePortfolioError, InputDataError
from .qp import best_of, dinkelbach, local_ascent, lp_max, pattern_search, solve_qp

Objective = Literal["utility", "sharpe"]
PenaltyForm = Literal["weighted", "simple", "none"]

TIE_TOL = 1e-10


@dataclass(frozen=True)
class MarketMoments:
    """Per-period mean returns and covariance of an in-sample window"""
    mu: np.ndarray
    sigma: np.ndarray
    tickers: Optional[List[str]] = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (mu.size, mu.size):
            raise InputDataError("Covariance must be n x n for n expected returns")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise InputDataError("Covariance must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class PenaltySpec:
    """Assortativity penalty: weighted R = scale rho.x, simple R = scale rho.y"""
    rho: np.ndarray
    form: PenaltyForm = "none"
    scale: float = 1.0

    def __post_init__(self):
        if self.form not in ("weighted", "simple", "none"):
            raise InputDataError(f"Unknown penalty form {self.form!r}")
        if self.scale < 0:
            raise InputDataError("Penalty scale must be nonnegative")
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float).ravel())

    @classmethod
    def none(cls, n: int) -> "PenaltySpec":
        return cls(rho=np.zeros(n), form="none", scale=0.0)

    @property
    def effective_form(self) -> PenaltyForm:
        """A zero scale or zero vector makes any form identical to no penalty"""
        if self.form == "none" or self.scale == 0 or not np.any(self.rho):
            return "none"
        return self.form


@dataclass
class PortfolioSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    R: float
    status: Literal["optimal", "heuristic", "infeasible"]
    nodes: int = 0
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.y))

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "y": [int(v) for v in self.y],
            "objective": self.objective,
            "R": self.R,
            "status": self.status,
        }


def penalty_value(spec: PenaltySpec, x: np.ndarray, y: np.ndarray) -> float:
    form = spec.effective_form
    if form == "weighted":
        return float(spec.scale * (spec.rho @ np.asarray(x, dtype=float)))
    if form == "simple":
        return float(spec.scale * (spec.rho @ np.asarray(y, dtype=float)))
    return 0.0


def better(value: float, support: Tuple[int, ...], n: int,
           best_value: float, best_support: Optional[Tuple[int, ...]]) -> bool:
    """Higher objective; within TIE_TOL the smaller support, then the lexicographically smaller y"""
    if best_support is None:
        return True
    if value > best_value + TIE_TOL:
        return True
    if value < best_value - TIE_TOL:
        return False
    if len(support) != len(best_support):
        return len(support) < len(best_support)
    y_new = tuple(1 if i in support else 0 for i in range(n))
    y_old = tuple(1 if i in best_support else 0 for i in range(n))
    return y_new < y_old


class PortfolioProblem:
    """
    One instance of the penalized Max-Utility or Max-Sharpe problem

    Knows how to evaluate the objective, solve the continuous problem on a
    fixed support (bounds [gamma, 1]) and bound the optimum of a
    branch-and-bound node from above.
    """

    def __init__(
        self,
        moments: MarketMoments,
        penalty: PenaltySpec,
        objective: Objective,
        gamma: float,
        delta: float = 1.0,
        stdev: bool = False,
        resolution: int = 100,
    ):
        if objective not in ("utility", "sharpe"):
            raise InputDataError(f"Unknown objective {objective!r}")
        if moments.n < 1:
            raise InputDataError("At least one asset is required")
        if penalty.rho.size != moments.n:
            raise InputDataError("Penalty vector length must equal the number of assets")
        if gamma > 1:
            raise InfeasiblePortfolioError(f"gamma = {gamma} > 1 leaves no feasible portfolio")
        if gamma <= 0:
            raise InputDataError("gamma must be positive")
        if objective == "utility" and delta <= 0:
            raise InputDataError("Risk aversion delta must be positive")

        self.moments = moments
        self.mu = moments.mu
        self.sigma = moments.sigma
        self.n = moments.n
        self.penalty = penalty
        self.form = penalty.effective_form
        self.rho = penalty.scale * penalty.rho if self.form != "none" else np.zeros(self.n)
        self.objective = objective
        self.gamma = float(gamma)
        self.delta = float(delta)
        self.stdev = bool(stdev)
        self.resolution = int(resolution)
        self.max_support = min(self.n, int(math.floor(1.0 / self.gamma + 1e-12)))
        self._leaves: Dict[FrozenSet[int], Tuple[np.ndarray, float]] = {}

    # evaluation

    def _ratio_rows(self, X: np.ndarray, idx: np.ndarray) -> np.ndarray:
        N = X @ self.mu[idx]
        D = np.einsum("ri,ij,rj->r", X, self.sigma[np.ix_(idx, idx)], X)
        return N / np.sqrt(D) if self.stdev else N / D

    def _values(self, X: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Objective of rows of X living on the coordinates idx (support penalty excluded)"""
        X = np.atleast_2d(X)
        if self.objective == "utility":
            S = self.sigma[np.ix_(idx, idx)]
            base = X @ self.mu[idx] - 0.5 * self.delta * np.einsum("ri,ij,rj->r", X, S, X)
        else:
            base = self._ratio_rows(X, idx)
        if self.form == "weighted":
            base = base - X @ self.rho[idx]
        return base

    def penalty_of(self, x: np.ndarray, y: np.ndarray) -> float:
        return penalty_value(self.penalty, x, y)

    def evaluate(self, x: np.ndarray, y: Optional[np.ndarray] = None) -> float:
        """Full objective including the penalty"""
        x = np.asarray(x, dtype=float)
        y = (x > 0).astype(int) if y is None else np.asarray(y)
        idx = np.arange(self.n)
        value = float(self._values(x[None, :], idx)[0])
        if self.form == "simple":
            value -= float(self.rho @ y)
        return value

    # per-support subproblem

    def _ratio_gradient(self, idx: np.ndarray):
        mu = self.mu[idx]
        S = self.sigma[np.ix_(idx, idx)]
        rho = self.rho[idx] if self.form == "weighted" else np.zeros(idx.size)

        def value(x):
            N, D = float(mu @ x), float(x @ S @ x)
            ratio = N / math.sqrt(D) if self.stdev else N / D
            return ratio - float(rho @ x)

        def gradient(x):
            N, Sx = float(mu @ x), S @ x
            D = float(x @ Sx)
            if self.stdev:
                return mu / math.sqrt(D) - N * Sx / D ** 1.5 - rho
            return mu / D - 2.0 * N * Sx / D ** 2 - rho

        return value, gradient

    def _sharpe_continuous(self, idx: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                           refine: bool) -> Tuple[np.ndarray, float]:
        mu = self.mu[idx]
        S = self.sigma[np.ix_(idx, idx)]
        top = lp_max(mu, lower, upper)
        positive = float(mu @ top) > 0
        if positive and self.form != "weighted" and not self.stdev:
            x, ratio, _ = dinkelbach(mu, S, lower, upper)
            return x, ratio

        value, gradient = self._ratio_gradient(idx)
        starts = [np.full(idx.size, 1.0 / idx.size), top]
        if positive:
            starts.append(dinkelbach(mu, S, lower, upper)[0])
        x, f = best_of([local_ascent(value, gradient, lower, upper, s) for s in starts])
        if refine:
            x, f = pattern_search(lambda X: self._values(X, idx), x, lower, upper, 1.0 / self.resolution)
        return x, f

    def solve_support(self, support: Iterable[int]) -> Tuple[np.ndarray, float]:
        """
        Best portfolio whose selected set is exactly `support`

        Returns the full-length weights and the full objective; results are
        cached so repeated requests are free and identical.
        """
        key = frozenset(int(i) for i in support)
        if key in self._leaves:
            return self._leaves[key]
        if not key or len(key) * self.gamma > 1 + 1e-12:
            raise InfeasiblePortfolioError(f"Support {sorted(key)} is infeasible for gamma={self.gamma}")

        idx = np.array(sorted(key))
        lower = np.full(idx.size, self.gamma)
        upper = np.ones(idx.size)
        if idx.size == 1:
            xs = np.ones(1)
            fs = float(self._values(xs[None, :], idx)[0])
        elif self.objective == "utility":
            c = self.mu[idx] - (self.rho[idx] if self.form == "weighted" else 0.0)
            res = solve_qp(c, self.delta * self.sigma[np.ix_(idx, idx)], lower, upper)
            xs, fs = res.x, res.value
        else:
            xs, fs = self._sharpe_continuous(idx, lower, upper, refine=True)

        if self.form == "simple":
            fs -= float(self.rho[idx].sum())
        x = np.zeros(self.n)
        x[idx] = xs
        self._leaves[key] = (x, float(fs))
        return x, float(fs)

    # relaxations

    def _relaxed_penalty(self, fixed1: np.ndarray, free: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        Linear under-estimator l.x + kappa of the penalty over every completion

        simple form: rho_i y_i >= rho_i x_i when rho_i > 0 and >= rho_i when rho_i < 0
        """
        ell = np.zeros(self.n)
        kappa = 0.0
        if self.form == "weighted":
            ell = self.rho.copy()
        elif self.form == "simple":
            kappa = float(self.rho[fixed1].sum())
            rf = self.rho[free]
            ell[free] = np.where(rf > 0, rf, 0.0)
            kappa += float(rf[rf < 0].sum())
        return ell, kappa

    def _node_bounds(self, fixed1: np.ndarray, free: np.ndarray):
        idx = np.sort(np.concatenate([fixed1, free])).astype(int)
        lower = np.where(np.isin(idx, fixed1), self.gamma, 0.0)
        upper = np.ones(idx.size)
        return idx, lower, upper

    def relaxation(self, fixed1: Iterable[int], free: Iterable[int]) -> Tuple[float, np.ndarray]:
        """
        Certified upper bound on every completion of a node and the relaxed point

        fixed1 assets carry x in [gamma, 1], free assets x in [0, 1], the rest 0.
        """
        fixed1 = np.asarray(sorted(fixed1), dtype=int)
        free = np.asarray(sorted(free), dtype=int)
        if fixed1.size * self.gamma > 1 + 1e-12 or fixed1.size > self.max_support:
            return -np.inf, np.zeros(self.n)
        if fixed1.size + free.size == 0:
            return -np.inf, np.zeros(self.n)

        idx, lower, upper = self._node_bounds(fixed1, free)
        ell, kappa = self._relaxed_penalty(fixed1, free)
        x = np.zeros(self.n)

        if self.objective == "utility":
            res = solve_qp(self.mu[idx] - ell[idx], self.delta * self.sigma[np.ix_(idx, idx)], lower, upper)
            x[idx] = res.x
            return res.value + res.gap - kappa, x

        ratio_ub, xr = self._ratio_bound(idx, lower, upper)
        x[idx] = xr
        if self.form == "weighted":
            floor = float(self.rho[idx] @ lp_max(-self.rho[idx], lower, upper))
        elif self.form == "simple":
            floor = kappa
        else:
            floor = 0.0
        return ratio_ub - floor, x

    def _ratio_bound(self, idx: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> Tuple[float, np.ndarray]:
        mu = self.mu[idx]
        S = self.sigma[np.ix_(idx, idx)]
        top = lp_max(mu, lower, upper)
        M = float(mu @ top)
        dmax = float(np.max(np.diag(S)))
        vmin = max(float(np.linalg.eigvalsh(S).min()), 0.0) / idx.size
        if M <= 0:
            return (M / math.sqrt(dmax) if self.stdev else M / dmax), top
        x, ratio, cert = dinkelbach(mu, S, lower, upper)
        if vmin <= 0:
            return np.inf, x
        if self.stdev:
            # mu.x <= t x'Sx + h  gives  mu.x / sqrt(x'Sx) <= t sqrt(dmax) + h / sqrt(vmin)
            return ratio * math.sqrt(dmax) + cert / math.sqrt(vmin), x
        return ratio + cert / vmin, x

    def relaxed_point(self, active: Iterable[int]) -> np.ndarray:
        """Continuous optimum of the relaxed objective on `active` with x in [0, 1], for the heuristic"""
        active = np.asarray(sorted(active), dtype=int)
        idx, lower, upper = self._node_bounds(np.zeros(0, dtype=int), active)
        ell, _ = self._relaxed_penalty(np.zeros(0, dtype=int), active)
        x = np.zeros(self.n)
        if idx.size == 1:
            x[idx] = 1.0
        elif self.objective == "utility":
            x[idx] = solve_qp(self.mu[idx] - ell[idx], self.delta * self.sigma[np.ix_(idx, idx)], lower, upper).x
        else:
            x[idx] = self._sharpe_continuous(idx, lower, upper, refine=False)[0]
        return x
