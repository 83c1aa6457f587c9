"""
Assortativity-penalized portfolio selection
Max quadratic utility and Max Sharpe with budget, long-only and semi-continuous
(gamma y <= x <= y) constraints, plus the unpenalized Markowitz benchmarks
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from ..data.marketdata import ReturnPanel
from ..exceptions import InputDataError
from .branch_bound import BranchAndBound, support_heuristic
from .problem import MarketMoments, Objective, PenaltySpec, PortfolioProblem, PortfolioSolution, penalty_value

JITTER_TARGET = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Exact branch-and-bound up to exact_max_assets assets (or always when exact)"""
    exact: bool = False
    exact_max_assets: int = 30
    max_nodes: int = 20000
    resolution: int = 100
    stdev_denominator: bool = False


def estimate_moments(returns: Union[ReturnPanel, np.ndarray]) -> MarketMoments:
    """
    Column means and sample covariance (denominator T - 1) of in-sample returns

    The covariance is shifted by eps * I with eps = max(0, 1e-10 - smallest
    eigenvalue) so it is positive definite even for T < n.
    """
    tickers = list(returns.tickers) if isinstance(returns, ReturnPanel) else None
    R = returns.returns if isinstance(returns, ReturnPanel) else np.asarray(returns, dtype=float)
    if R.ndim != 2 or R.shape[0] < 2:
        raise InputDataError("At least 2 return rows are needed for moments")
    mu = R.mean(axis=0)
    sigma = np.atleast_2d(np.cov(R, rowvar=False, ddof=1))
    sigma = (sigma + sigma.T) / 2.0
    eps = max(0.0, JITTER_TARGET - float(np.linalg.eigvalsh(sigma).min()))
    if eps > 0:
        sigma = sigma + eps * np.eye(sigma.shape[0])
    return MarketMoments(mu=mu, sigma=sigma, tickers=tickers)


def portfolio_penalty(spec: PenaltySpec, x: np.ndarray, y: np.ndarray) -> float:
    """weighted: scale rho.x, simple: scale rho.y, none: 0"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != spec.rho.shape or y.shape != spec.rho.shape:
        raise InputDataError("x, y and rho must have the same length")
    return penalty_value(spec, x, y)


def solve_portfolio(
    moments: MarketMoments,
    spec: PenaltySpec,
    objective: Objective,
    gamma: float,
    delta: float = 1.0,
    options: Optional[SolverOptions] = None,
) -> PortfolioSolution:
    """Shared driver behind the utility, Sharpe and benchmark entry points"""
    options = options or SolverOptions()
    problem = PortfolioProblem(
        moments, spec, objective, gamma=gamma, delta=delta,
        stdev=options.stdev_denominator, resolution=options.resolution,
    )
    if objective == "sharpe" and np.all(moments.mu <= 0):
        logger.warning("Every expected return is <= 0; the Sharpe objective is degenerate, best feasible kept")

    if problem.n == 1 or options.exact or problem.n <= options.exact_max_assets:
        result = BranchAndBound(problem, max_nodes=options.max_nodes).solve()
        status = "optimal" if result.closed else "heuristic"
    else:
        result = support_heuristic(problem)
        status = "heuristic"

    y = np.zeros(problem.n, dtype=int)
    y[list(result.support)] = 1
    x = np.where(y == 1, result.x, 0.0)
    return PortfolioSolution(
        x=x,
        y=y,
        objective=float(result.value),
        R=penalty_value(spec, x, y),
        status=status,
        nodes=result.nodes,
        diagnostics={"gap": float(result.gap)},
    )


def max_quadratic_utility(
    moments: MarketMoments,
    spec: PenaltySpec,
    delta: float = 1.0,
    gamma: float = 0.01,
    options: Optional[SolverOptions] = None,
) -> PortfolioSolution:
    """Maximize mu.x - (delta / 2) x'Sigma x - R over the constraint block"""
    return solve_portfolio(moments, spec, "utility", gamma=gamma, delta=delta, options=options)


def max_sharpe(
    moments: MarketMoments,
    spec: PenaltySpec,
    gamma: float = 0.01,
    options: Optional[SolverOptions] = None,
) -> PortfolioSolution:
    """Maximize mu.x / x'Sigma x - R (or mu.x / sqrt(x'Sigma x) - R with stdev_denominator)"""
    return solve_portfolio(moments, spec, "sharpe", gamma=gamma, options=options)


def markowitz_benchmark(
    moments: MarketMoments,
    objective: Objective,
    delta: float = 1.0,
    gamma: float = 0.01,
    options: Optional[SolverOptions] = None,
) -> PortfolioSolution:
    """The corresponding problem without any assortativity penalty"""
    return solve_portfolio(moments, PenaltySpec.none(moments.n), objective, gamma=gamma, delta=delta,
                           options=options)


@dataclass(frozen=True)
class PortfolioInstance:
    moments: MarketMoments
    penalty: PenaltySpec
    objective: Objective
    delta: float
    gamma: float

    def to_dict(self) -> dict:
        return {
            "mu": self.moments.mu.tolist(),
            "sigma": self.moments.sigma.tolist(),
            "rho": self.penalty.rho.tolist(),
            "form": self.penalty.form,
            "scale": self.penalty.scale,
            "delta": self.delta,
            "gamma": self.gamma,
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PortfolioInstance":
        try:
            mu = np.asarray(data["mu"], dtype=float)
            moments = MarketMoments(mu=mu, sigma=np.asarray(data["sigma"], dtype=float))
            rho = np.asarray(data.get("rho", np.zeros(mu.size)), dtype=float)
            penalty = PenaltySpec(rho=rho, form=data.get("form", "none"), scale=float(data.get("scale", 1.0)))
            objective = data["objective"]
            if objective not in ("utility", "sharpe"):
                raise ValueError(f"unknown objective {objective!r}")
            return cls(moments, penalty, objective, float(data.get("delta", 1.0)), float(data["gamma"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InputDataError(f"Malformed portfolio instance: {e}")

    def solve(self, options: Optional[SolverOptions] = None) -> PortfolioSolution:
        return solve_portfolio(self.moments, self.penalty, self.objective, self.gamma, self.delta, options)


def save_instance(instance: PortfolioInstance, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        json.dump(instance.to_dict(), f, indent=2)
    return out


def load_instance(path: Union[str, Path]) -> PortfolioInstance:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputDataError(f"Failed to read portfolio instance {path}: {e}")
    return PortfolioInstance.from_dict(data)


def save_solution(solution: PortfolioSolution, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        json.dump(solution.to_dict(), f, indent=2)
    return out
