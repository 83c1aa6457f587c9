#!/usr/bin/env python3
"""
Interactive demo of the MTD portfolio tool
Builds an MTD network from a synthetic market, inspects its assortativity and
compares penalized portfolios with the Markowitz benchmark over a short backtest
"""

import os
import sys

import numpy as np
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from mtd_portfolio_tool import (
    PenaltySpec,
    compute_assortativity,
    estimate_moments,
    fit_mtd,
    from_lambda,
    load_config,
    log_returns,
    max_quadratic_utility,
    run_backtest,
    synthetic_prices,
)
from mtd_portfolio_tool.data import DiscretizationScheme, discretize
from mtd_portfolio_tool.exceptions import DegenerateAssortativityError
from mtd_portfolio_tool.networks import ALL_MODALITIES
from mtd_portfolio_tool.portfolio import markowitz_benchmark


def demo_network(returns):
    """Fit the MTD model and show the strongest links"""
    print("\n" + "="*60)
    print("MTD NETWORK DEMO")
    print("="*60)

    states = discretize(returns, DiscretizationScheme())
    print(f"\n🔄 Fitting MTD model on {returns.num_days} days x {returns.num_assets} assets...")
    model = fit_mtd(states, restarts=2)
    net = from_lambda(model.lambdas, returns.tickers)
    print(f"✅ {net.num_edges} edges, total weight {net.omega:.4f}")

    src, tgt, w = net.edges()
    order = np.argsort(-w)[:5]
    print("\n📊 Strongest links (source -> target):")
    for k in order:
        print(f"   {net.tickers[src[k]]} -> {net.tickers[tgt[k]]}: {w[k]:.4f}")
    return net


def demo_assortativity(net):
    """Global coefficient per modality and the Peel local profile"""
    print("\n" + "="*60)
    print("ASSORTATIVITY DEMO")
    print("="*60)

    for mode in ALL_MODALITIES:
        try:
            res = compute_assortativity(net, "global", mode)
            print(f"   {mode.label:<8} rho_g = {res.rho_g:+.4f}")
        except DegenerateAssortativityError as e:
            print(f"   {mode.label:<8} ⚠️  {e}")

    try:
        peel = compute_assortativity(net, "peel", "out-in")
    except DegenerateAssortativityError as e:
        print(f"\n⚠️  No Peel profile: {e}")
        return None
    print("\n📈 Peel local assortativity (out-in):")
    for ticker, value in zip(net.tickers, peel.rho_local):
        print(f"   {ticker}: {value:+.4f}")
    return peel.rho_local


def demo_portfolio(returns, rho):
    """Max utility with and without the assortativity penalty"""
    print("\n" + "="*60)
    print("PORTFOLIO DEMO")
    print("="*60)

    moments = estimate_moments(returns)
    bench = markowitz_benchmark(moments, "utility")
    print(f"\n💼 Markowitz weights:   {np.round(bench.x, 3)}")
    if rho is None:
        return
    penalized = max_quadratic_utility(moments, PenaltySpec(rho, "weighted", 0.01))
    print(f"💼 Penalized weights:   {np.round(penalized.x, 3)}  (R = {penalized.R:+.5f})")


def demo_backtest(prices):
    """Short rolling backtest with a reduced configuration grid"""
    print("\n" + "="*60)
    print("BACKTEST DEMO")
    print("="*60)

    config = load_config(overrides={"measures": ["sabek", "peel"], "modalities": ["out-in"], "restarts": 1})
    print("\n🔄 Running backtest...")
    report = run_backtest(prices, config)
    print(f"\n📈 Out-of-sample results ({len(report.fits)} windows):")
    print(report.performance.to_string(index=False))


def main():
    """Run complete demo"""
    print("\n" + "="*60)
    print("MTD PORTFOLIO TOOL - INTERACTIVE DEMO")
    print("="*60)

    prices = synthetic_prices(num_assets=6, num_days=300, seed=7)
    returns = log_returns(prices)

    net = demo_network(returns)
    rho = demo_assortativity(net)
    demo_portfolio(returns, rho)
    demo_backtest(prices)

    print("\n" + "="*60)
    print("DEMO COMPLETED!")
    print("="*60)
    print("\n📚 Next steps:")
    print("   1. Put your own prices in a date,TICKER,... CSV")
    print("   2. python -m mtd_portfolio_tool backtest --prices prices.csv --output-dir results")
    print("   3. python -m mtd_portfolio_tool plotdata --backtest results --kind node-profile")


if __name__ == "__main__":
    main()
