"""
Rolling-window backtest
Per window: discretize, fit the MTD network, compute assortativity, estimate moments,
solve every portfolio configuration and hold the weights over the out-of-sample block
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..config import BacktestConfig
from ..data.marketdata import DiscretizationScheme, PricePanel, ReturnPanel, discretize, log_returns, rolling_windows
from ..exceptions import DegenerateAssortativityError, DegenerateDataError, MtdToolError
from ..models.mtd import fit_mtd
from ..networks.assortativity import AssortativityResult, compute_assortativity
from ..networks.graph import DirectedNetwork, from_correlation, from_lambda
from ..portfolio.optimizer import SolverOptions, estimate_moments, solve_portfolio
from ..portfolio.problem import MarketMoments, PenaltySpec, PortfolioSolution

CORRELATION_MODALITY = "out-out"


@dataclass(frozen=True)
class ConfigKey:
    """One report row: the variant column holds the modality, 'correlation' or 'benchmark'"""
    measure: str
    variant: str
    objective: str
    penalty_form: str

    @property
    def is_benchmark(self) -> bool:
        return self.variant == "benchmark"

    @property
    def modality(self) -> str:
        return CORRELATION_MODALITY if self.variant == "correlation" else self.variant

    @property
    def label(self) -> str:
        return f"{self.measure}/{self.variant}/{self.objective}/{self.penalty_form}"


@dataclass
class WindowRecord:
    window: int
    key: ConfigKey
    solution: PortfolioSolution
    oos_returns: np.ndarray
    in_sample_returns: np.ndarray
    fallback: bool = False
    reason: Optional[str] = None


@dataclass
class WindowFit:
    """Everything estimated once per window and shared by all configurations"""
    index: int
    in_dates: Tuple[str, str]
    out_dates: Tuple[str, str]
    network: Optional[DirectedNetwork]
    moments: MarketMoments
    results: Dict[Tuple[str, str], Union[AssortativityResult, MtdToolError]]
    correlation_results: Dict[str, Union[AssortativityResult, MtdToolError]]
    lambda_converged: List[bool]

    def rho_for(self, key: ConfigKey) -> Union[AssortativityResult, MtdToolError]:
        if key.variant == "correlation":
            return self.correlation_results[key.measure]
        return self.results[(key.measure, key.variant)]


@dataclass
class BacktestReport:
    config: BacktestConfig
    tickers: List[str]
    keys: List[ConfigKey]
    records: List[WindowRecord]
    fits: List[WindowFit]
    # filled by reports.summarize
    performance: Optional[pd.DataFrame] = None
    in_sample: Optional[pd.DataFrame] = None
    assortativity_stats: Optional[pd.DataFrame] = None
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def records_for(self, key: ConfigKey) -> List[WindowRecord]:
        return [r for r in self.records if r.key == key]


def annualize(daily_mean: float, daily_std: float, periods: int = 252) -> Tuple[float, float]:
    """(periods * mean, sqrt(periods) * std)"""
    return periods * daily_mean, math.sqrt(periods) * daily_std


def configuration_keys(config: BacktestConfig) -> List[ConfigKey]:
    """Benchmark rows first, then every (measure, modality, form, objective) and the correlation variants"""
    keys = [ConfigKey("markowitz", "benchmark", obj, "none") for obj in config.objectives]
    for measure in config.measures:
        for modality in config.modalities:
            for form in config.penalty_forms:
                for obj in config.objectives:
                    keys.append(ConfigKey(measure, modality, obj, form))
        if config.include_correlation and config.network_source == "mtd":
            for form in config.penalty_forms:
                for obj in config.objectives:
                    keys.append(ConfigKey(measure, "correlation", obj, form))
    return keys


def _safe_assortativity(net: DirectedNetwork, measure: str, modality: str, points: int):
    try:
        return compute_assortativity(net, measure, modality, points)
    except DegenerateAssortativityError as e:
        return e


def _window_network(in_panel: ReturnPanel, config: BacktestConfig) -> Tuple[DirectedNetwork, List[bool]]:
    if config.network_source == "correlation":
        return from_correlation(in_panel), []
    scheme = DiscretizationScheme(kind=config.state_scheme, num_states=config.num_states,
                                  zero_band=config.zero_band)
    model = fit_mtd(discretize(in_panel, scheme), smoothing=config.smoothing, max_iters=config.max_iters,
                    tol=config.tol, restarts=config.restarts, seed=config.seed)
    return from_lambda(model.lambdas, in_panel.tickers), model.lambdas.converged.tolist()


def fit_window(returns: ReturnPanel, window, config: BacktestConfig) -> WindowFit:
    """
    Estimate states, network, assortativity vectors and moments on one in-sample block

    A network that cannot be built (degenerate states or correlations) is recorded
    as the outcome of every (measure, modality); the moments are still estimated so
    the benchmark portfolios stay available for the window.
    """
    in_panel = returns.slice(window.in_sample)
    network: Optional[DirectedNetwork] = None
    lambda_converged: List[bool] = []
    results = {}
    try:
        network, lambda_converged = _window_network(in_panel, config)
    except MtdToolError as e:
        logger.warning(f"Window {window.index}: no network ({e}); penalized configurations use the benchmark")
        results = {(m, mode): e for m in config.measures for mode in config.modalities}
    else:
        for measure in config.measures:
            for modality in config.modalities:
                results[(measure, modality)] = _safe_assortativity(network, measure, modality,
                                                                   config.quadrature_points)

    correlation_results = {}
    if config.include_correlation and config.network_source == "mtd" and config.measures:
        try:
            corr_net = from_correlation(in_panel)
            for measure in config.measures:
                correlation_results[measure] = _safe_assortativity(
                    corr_net, measure, CORRELATION_MODALITY, config.quadrature_points)
        except DegenerateDataError as e:
            correlation_results = {measure: e for measure in config.measures}

    return WindowFit(
        index=window.index,
        in_dates=(in_panel.dates[0], in_panel.dates[-1]),
        out_dates=(returns.dates[window.out_sample.start], returns.dates[window.out_sample.stop - 1]),
        network=network,
        moments=estimate_moments(in_panel),
        results=results,
        correlation_results=correlation_results,
        lambda_converged=lambda_converged,
    )


def run_backtest(prices: PricePanel, config: BacktestConfig) -> BacktestReport:
    """
    Run every configuration over every rolling window

    Degenerate assortativity in a window makes that configuration hold the
    Markowitz benchmark portfolio for the window; it is counted in the diagnostics.
    """
    from .reports import summarize

    returns = log_returns(prices)
    windows = rolling_windows(returns.num_days, config.in_len, config.out_len, config.step)
    keys = configuration_keys(config)
    options = SolverOptions(
        exact=config.exact,
        exact_max_assets=config.exact_max_assets,
        max_nodes=config.max_nodes,
        stdev_denominator=config.stdev_denominator,
    )
    logger.info(f"Backtest over {len(windows)} window(s), {len(keys)} configuration(s), {prices.num_assets} assets")

    records: List[WindowRecord] = []
    fits: List[WindowFit] = []
    for window in windows:
        fit = fit_window(returns, window, config)
        fits.append(fit)
        in_returns = returns.returns[window.in_sample.start:window.in_sample.stop]
        out_returns = returns.returns[window.out_sample.start:window.out_sample.stop]

        benchmarks = {
            obj: solve_portfolio(fit.moments, PenaltySpec.none(prices.num_assets), obj,
                                 gamma=config.gamma, delta=config.delta, options=options)
            for obj in config.objectives
        }

        for key in keys:
            fallback, reason = False, None
            if key.is_benchmark:
                solution = benchmarks[key.objective]
            else:
                outcome = fit.rho_for(key)
                if isinstance(outcome, MtdToolError):
                    solution, fallback, reason = benchmarks[key.objective], True, str(outcome)
                else:
                    spec = PenaltySpec(rho=outcome.rho_local, form=key.penalty_form, scale=config.scale)
                    if spec.effective_form == "none":
                        solution = benchmarks[key.objective]
                    else:
                        solution = solve_portfolio(fit.moments, spec, key.objective, gamma=config.gamma,
                                                   delta=config.delta, options=options)
            records.append(WindowRecord(
                window=window.index,
                key=key,
                solution=solution,
                oos_returns=out_returns @ solution.x,
                in_sample_returns=in_returns @ solution.x,
                fallback=fallback,
                reason=reason,
            ))

        degenerate = sum(1 for r in records if r.window == window.index and r.fallback)
        if degenerate:
            logger.warning(f"Window {window.index}: {degenerate} configuration(s) fell back to the benchmark")
        logger.info(f"Window {window.index + 1}/{len(windows)} done ({fit.out_dates[0]} .. {fit.out_dates[1]})")

    report = BacktestReport(config=config, tickers=list(prices.tickers), keys=keys, records=records, fits=fits)
    return summarize(report)
