"""
Command-line entry point
Subcommands: synth, estimate, network, assort, optimize, backtest, plotdata
Exit codes: 0 ok, 2 input error, 3 degenerate computation, 4 infeasible portfolio, 1 other
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from loguru import logger

from .backtest import load_report_document, run_backtest, write_report
from .config import BacktestConfig, coerce_value, load_config
from .data import DiscretizationScheme, ReturnPanel, discretize, load_prices, log_returns, synthetic_prices, write_prices
from .exceptions import InputDataError, MtdToolError
from .models import fit_mtd, save_model
from .networks import (
    ALL_MODALITIES,
    LOCAL_MEASURES,
    DirectedNetwork,
    Modality,
    compute_assortativity,
    edge_assortativity_table,
    from_correlation,
    from_lambda,
    load_network,
    save_network,
    write_assortativity_csv,
    write_edge_list,
)
from .plotting import PROFILE_KINDS, build_profiles, write_profiles
from .portfolio import PenaltySpec, PortfolioInstance, SolverOptions, estimate_moments, load_instance, save_solution

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


def configure_logging(level: Optional[str] = None) -> None:
    """Single stderr sink; level from the flag, then MTD_LOG_LEVEL, then INFO"""
    level = (level or os.getenv("MTD_LOG_LEVEL") or "INFO").upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)


def parse_overrides(extra: List[str]) -> Dict[str, Any]:
    """Turn leftover '--key value' pairs into config overrides"""
    overrides: Dict[str, Any] = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise InputDataError(f"Unexpected argument {token!r}")
        name, _, inline = token[2:].partition("=")
        name = name.replace("-", "_")
        if name not in BacktestConfig.model_fields:
            raise InputDataError(f"Unknown option --{token[2:]}")
        if inline:
            raw = inline
            i += 1
        else:
            if i + 1 >= len(extra):
                raise InputDataError(f"Option --{name} needs a value")
            raw = extra[i + 1]
            i += 2
        overrides[name] = coerce_value(name, raw)
    return overrides


def _settings(args: argparse.Namespace, extra: List[str]) -> BacktestConfig:
    overrides = parse_overrides(extra)
    if args.seed is not None:
        overrides["seed"] = args.seed
    args.overrides = overrides
    return load_config(args.config, overrides)


def _output(args: argparse.Namespace, name: str) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _scheme(config: BacktestConfig) -> DiscretizationScheme:
    return DiscretizationScheme(kind=config.state_scheme, num_states=config.num_states, zero_band=config.zero_band)


def _fit_network(returns: ReturnPanel, config: BacktestConfig) -> DirectedNetwork:
    if config.network_source == "correlation":
        return from_correlation(returns)
    model = fit_mtd(discretize(returns, _scheme(config)), smoothing=config.smoothing,
                    max_iters=config.max_iters, tol=config.tol, restarts=config.restarts,
                    seed=config.seed)
    return from_lambda(model.lambdas, model.tickers)


def cmd_synth(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    panel = synthetic_prices(num_assets=args.num_assets, num_days=args.num_days, seed=config.seed, drift=args.drift)
    return [write_prices(panel, _output(args, args.name))]


def cmd_estimate(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    panel = load_prices(args.prices, min_assets=1)
    states = discretize(log_returns(panel), _scheme(config))
    model = fit_mtd(states, smoothing=config.smoothing, max_iters=config.max_iters, tol=config.tol,
                    restarts=config.restarts, seed=config.seed)
    return [save_model(model, _output(args, args.name))]


def cmd_network(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    if args.model:
        net = load_network(args.model)
    elif args.prices:
        returns = log_returns(load_prices(args.prices))
        net = _fit_network(returns, config)
    else:
        raise InputDataError("network needs --model or --prices")
    return [save_network(net, _output(args, "network.json")), write_edge_list(net, _output(args, "edges.csv"))]


def _measures(value: str) -> List[str]:
    return ["global", *LOCAL_MEASURES] if value == "all" else [value]


def _modalities(value: str) -> List[Modality]:
    return list(ALL_MODALITIES) if value == "all" else [Modality.parse(value)]


def cmd_assort(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    net = load_network(args.network)
    results = [
        compute_assortativity(net, measure, mode, config.quadrature_points)
        for measure in _measures(args.measure)
        for mode in _modalities(args.modality)
    ]
    written = [write_assortativity_csv(results, net.tickers, _output(args, args.name))]
    if args.edges:
        for mode in _modalities(args.modality):
            path = _output(args, f"edge_assortativity_{mode.label}.csv")
            edge_assortativity_table(net, mode).to_csv(path, index=False, float_format="%.17g")
            written.append(path)
    return written


def cmd_optimize(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    options = SolverOptions(exact=config.exact, exact_max_assets=config.exact_max_assets,
                            max_nodes=config.max_nodes, stdev_denominator=config.stdev_denominator)
    if args.instance:
        instance = load_instance(args.instance)
        # flags given on the command line win over the instance file
        changes = {k: getattr(config, k) for k in ("gamma", "delta") if k in getattr(args, "overrides", {})}
        if changes:
            instance = dataclasses.replace(instance, **changes)
    elif args.prices:
        returns = log_returns(load_prices(args.prices))
        net = _fit_network(returns, config)
        rho = compute_assortativity(net, args.measure, args.modality, config.quadrature_points).rho_local
        instance = PortfolioInstance(
            moments=estimate_moments(returns),
            penalty=PenaltySpec(rho=rho, form=args.form or config.penalty_forms[0], scale=config.scale),
            objective=args.objective or config.objectives[0],
            delta=config.delta,
            gamma=config.gamma,
        )
    else:
        raise InputDataError("optimize needs --instance or --prices")
    solution = instance.solve(options)
    logger.info(f"{instance.objective} objective {solution.objective:.10g}, support {list(solution.support)}")
    return [save_solution(solution, _output(args, args.name))]


def cmd_backtest(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    prices = load_prices(args.prices)
    report = run_backtest(prices, config)
    return write_report(report, args.output_dir)


def cmd_plotdata(args: argparse.Namespace, config: BacktestConfig) -> List[Path]:
    document = load_report_document(args.backtest)
    profiles = build_profiles(
        document,
        args.kind,
        measures=[args.measure] if args.measure else None,
        modalities=[args.modality] if args.modality else None,
        span=config.loess_span,
        grid=config.loess_grid,
        market=config.market if config.market != "custom" else None,
    )
    return [write_profiles(profiles, _output(args, f"{args.kind}.csv"))]


COMMANDS = {
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "network": cmd_network,
    "assort": cmd_assort,
    "optimize": cmd_optimize,
    "backtest": cmd_backtest,
    "plotdata": cmd_plotdata,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON settings file")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--output-dir", default=".", help="Directory for written files")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="mtd_portfolio_tool",
        description="MTD financial networks, assortativity and penalized portfolio backtests. "
                    "Any setting can be overridden with --key value.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="Write a synthetic price CSV")
    p.add_argument("--num-assets", type=int, default=5)
    p.add_argument("--num-days", type=int, default=500)
    p.add_argument("--drift", type=float, default=0.0003)
    p.add_argument("--name", default="prices.csv")

    p = sub.add_parser("estimate", parents=[common], help="Fit the MTD model to a price CSV")
    p.add_argument("--prices", required=True)
    p.add_argument("--name", default="model.json")

    p = sub.add_parser("network", parents=[common], help="Export the network of a model or price CSV")
    p.add_argument("--model", help="Fitted-model or network file")
    p.add_argument("--prices", help="Price CSV (fits the network first)")

    p = sub.add_parser("assort", parents=[common], help="Global and local assortativity of a network")
    p.add_argument("--network", required=True, help="Network JSON, model JSON or edge-list CSV")
    p.add_argument("--measure", default="all", choices=["all", "global", *LOCAL_MEASURES])
    p.add_argument("--modality", default="all", choices=["all", *[m.label for m in ALL_MODALITIES]])
    p.add_argument("--edges", action="store_true", help="Also write the edge assortativity tables")
    p.add_argument("--name", default="assortativity.csv")

    p = sub.add_parser("optimize", parents=[common], help="Solve one penalized portfolio problem")
    p.add_argument("--instance", help="Portfolio instance JSON")
    p.add_argument("--prices", help="Price CSV (moments and assortativity estimated on all rows)")
    p.add_argument("--measure", default="sabek", choices=list(LOCAL_MEASURES))
    p.add_argument("--modality", default="out-in", choices=[m.label for m in ALL_MODALITIES])
    p.add_argument("--form", choices=["weighted", "simple", "none"])
    p.add_argument("--objective", choices=["utility", "sharpe"])
    p.add_argument("--name", default="solution.json")

    p = sub.add_parser("backtest", parents=[common], help="Run the rolling-window backtest")
    p.add_argument("--prices", required=True)

    p = sub.add_parser("plotdata", parents=[common], help="Loess profiles from a backtest document")
    p.add_argument("--backtest", required=True, help="backtest.json or the directory holding it")
    p.add_argument("--kind", required=True, choices=list(PROFILE_KINDS))
    p.add_argument("--measure", choices=list(LOCAL_MEASURES))
    p.add_argument("--modality", choices=[m.label for m in ALL_MODALITIES])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    configure_logging(args.log_level)
    try:
        config = _settings(args, extra)
        written = COMMANDS[args.command](args, config)
    except MtdToolError as e:
        logger.error(str(e))
        return e.exit_code
    for path in written:
        logger.info(f"Wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
