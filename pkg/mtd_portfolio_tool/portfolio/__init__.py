"""Penalized portfolio optimization, exact search and verification oracle"""

from .branch_bound import BranchAndBound, support_heuristic
from .optimizer import (
    PortfolioInstance,
    SolverOptions,
    estimate_moments,
    load_instance,
    markowitz_benchmark,
    max_quadratic_utility,
    max_sharpe,
    portfolio_penalty,
    save_instance,
    save_solution,
    solve_portfolio,
)
from .oracle import brute_force_search
from .problem import MarketMoments, PenaltySpec, PortfolioProblem, PortfolioSolution

__all__ = [
    "BranchAndBound",
    "support_heuristic",
    "PortfolioInstance",
    "SolverOptions",
    "estimate_moments",
    "load_instance",
    "markowitz_benchmark",
    "max_quadratic_utility",
    "max_sharpe",
    "portfolio_penalty",
    "save_instance",
    "save_solution",
    "solve_portfolio",
    "brute_force_search",
    "MarketMoments",
    "PenaltySpec",
    "PortfolioProblem",
    "PortfolioSolution",
]
