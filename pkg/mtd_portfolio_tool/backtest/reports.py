"""
Backtest report tables
Out-of-sample and in-sample performance per configuration, assortativity statistics
per (measure, modality), and the JSON document with per-window records
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..exceptions import DegenerateAssortativityError, DegenerateDataError, InputDataError, MtdToolError
from ..networks.assortativity import AssortativityResult
from ..networks.graph import network_to_dict
from .engine import BacktestReport, ConfigKey, WindowRecord, annualize

REPORT_COLUMNS = [
    "measure", "variant", "objective", "penalty_form",
    "expected_return", "annual_volatility", "sharpe_ratio",
]
IN_SAMPLE_COLUMNS = REPORT_COLUMNS + ["assortativity"]
STATS_COLUMNS = [
    "measure", "modality", "mean_global", "prop_positive",
    "mean_positive", "mean_negative", "windows",
]


def _performance(daily: np.ndarray, periods: int) -> Dict[str, float]:
    mean = float(np.mean(daily)) if daily.size else math.nan
    std = float(np.std(daily, ddof=1)) if daily.size > 1 else math.nan
    annual_return, annual_vol = annualize(mean, std, periods)
    sharpe = annual_return / annual_vol if annual_vol > 0 else math.nan
    return {"expected_return": annual_return, "annual_volatility": annual_vol, "sharpe_ratio": sharpe}


def _key_columns(key: ConfigKey) -> Dict[str, str]:
    return {"measure": key.measure, "variant": key.variant, "objective": key.objective,
            "penalty_form": key.penalty_form}


def performance_table(report: BacktestReport, in_sample: bool = False) -> pd.DataFrame:
    """
    One row per configuration, in configuration order

    Args:
        report: Backtest output with its records
        in_sample: Use the in-sample daily returns and add the mean achieved assortativity R

    Returns:
        DataFrame with REPORT_COLUMNS (or IN_SAMPLE_COLUMNS)
    """
    periods = report.config.annualization
    rows = []
    for key in report.keys:
        records = report.records_for(key)
        if in_sample:
            daily = np.concatenate([r.in_sample_returns for r in records]) if records else np.zeros(0)
        else:
            daily = np.concatenate([r.oos_returns for r in records]) if records else np.zeros(0)
        row = {**_key_columns(key), **_performance(daily, periods)}
        if in_sample:
            row["assortativity"] = float(np.mean([r.solution.R for r in records])) if records else math.nan
        rows.append(row)
    return pd.DataFrame(rows, columns=IN_SAMPLE_COLUMNS if in_sample else REPORT_COLUMNS)


def assortativity_statistics(
    results: Iterable[Union[AssortativityResult, Exception]],
    measure: str,
    modality: str,
) -> Dict[str, Optional[float]]:
    """
    Averages over the rolling networks of one (measure, modality)

    Degenerate windows (exceptions in the input) are skipped. The conditional means
    are None when no local value has that sign.
    """
    usable = [r for r in results if isinstance(r, AssortativityResult)]
    if not usable:
        raise DegenerateDataError(f"No non-degenerate window for {measure} {modality}")
    locals_ = np.concatenate([np.asarray(r.rho_local, dtype=float) for r in usable])
    positive = locals_[locals_ > 0]
    negative = locals_[locals_ < 0]
    return {
        "measure": measure,
        "modality": modality,
        "mean_global": float(np.mean([r.rho_g for r in usable])),
        "prop_positive": float(positive.size / locals_.size) if locals_.size else math.nan,
        "mean_positive": float(positive.mean()) if positive.size else None,
        "mean_negative": float(negative.mean()) if negative.size else None,
        "windows": len(usable),
    }


def statistics_table(report: BacktestReport) -> pd.DataFrame:
    rows = []
    for measure in report.config.measures:
        for modality in report.config.modalities:
            results = [fit.results[(measure, modality)] for fit in report.fits]
            try:
                rows.append(assortativity_statistics(results, measure, modality))
            except DegenerateDataError:
                logger.warning(f"Every window is degenerate for {measure} {modality}; no statistics row")
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


def backtest_diagnostics(report: BacktestReport) -> Dict[str, object]:
    """Fallback accounting per configuration and per-window flags"""
    per_config = {}
    for key in report.keys:
        records = report.records_for(key)
        per_config[key.label] = {
            "windows": len(records),
            "solved": sum(1 for r in records if not r.fallback),
            "degenerate": sum(1 for r in records if r.fallback),
            "heuristic": sum(1 for r in records if r.solution.status != "optimal"),
        }

    windows = []
    for fit in report.fits:
        degenerate = []
        for (measure, modality), outcome in fit.results.items():
            if isinstance(outcome, MtdToolError):
                degenerate.append(_degenerate_entry(measure, modality, outcome))
        for measure, outcome in fit.correlation_results.items():
            if isinstance(outcome, MtdToolError):
                degenerate.append(_degenerate_entry(measure, "correlation", outcome))
        windows.append({
            "window": fit.index,
            "lambda_converged": fit.lambda_converged,
            "degenerate": degenerate,
        })
    return {"configurations": per_config, "windows": windows}


def _degenerate_entry(measure: str, variant: str, error: MtdToolError) -> dict:
    entry = {"measure": measure, "variant": variant, "message": str(error)}
    if isinstance(error, DegenerateAssortativityError):
        entry["end"] = error.end
    return entry


def summarize(report: BacktestReport) -> BacktestReport:
    report.performance = performance_table(report)
    report.in_sample = performance_table(report, in_sample=True)
    report.assortativity_stats = statistics_table(report)
    report.diagnostics = backtest_diagnostics(report)
    fallbacks = sum(c["degenerate"] for c in report.diagnostics["configurations"].values())
    if fallbacks:
        logger.warning(f"{fallbacks} window/configuration pair(s) used the benchmark fallback")
    return report


def _clean(value):
    """JSON-safe floats: NaN and inf become null"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _record_dict(record: WindowRecord) -> dict:
    solution = record.solution.to_dict()
    return {
        "window": record.window,
        **_key_columns(record.key),
        "x": solution["x"],
        "y": solution["y"],
        "objective_value": _clean(solution["objective"]),
        "R": _clean(solution["R"]),
        "status": solution["status"],
        "fallback": record.fallback,
        "reason": record.reason,
    }


def _window_dict(fit) -> dict:
    assortativity = []
    for (measure, modality), outcome in fit.results.items():
        if isinstance(outcome, AssortativityResult):
            assortativity.append({
                "measure": measure,
                "modality": modality,
                "rho_g": outcome.rho_g,
                "rho_local": np.asarray(outcome.rho_local).tolist(),
            })
    return {
        "window": fit.index,
        "in_sample": list(fit.in_dates),
        "out_sample": list(fit.out_dates),
        "network": network_to_dict(fit.network) if fit.network is not None else None,
        "assortativity": assortativity,
    }


def report_document(report: BacktestReport) -> dict:
    """Settings, per-window networks and assortativity, records and diagnostics"""
    return {
        "config": report.config.model_dump(),
        "tickers": report.tickers,
        "windows": [_window_dict(fit) for fit in report.fits],
        "records": [_record_dict(r) for r in report.records],
        "diagnostics": report.diagnostics,
    }


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format="%.17g", na_rep="")
    return path


def write_report(report: BacktestReport, output_dir: Union[str, Path]) -> List[Path]:
    """
    Write report.csv, report_in_sample.csv, assortativity_stats.csv and backtest.json

    Returns:
        Paths written, in that order
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write_frame(report.performance, out / "report.csv"),
        _write_frame(report.in_sample, out / "report_in_sample.csv"),
        _write_frame(report.assortativity_stats, out / "assortativity_stats.csv"),
    ]
    json_path = out / "backtest.json"
    with open(json_path, "w") as f:
        json.dump(report_document(report), f, indent=2, allow_nan=False)
    written.append(json_path)
    return written


def load_report_document(path: Union[str, Path]) -> dict:
    """Read backtest.json (or the directory holding it)"""
    source = Path(path)
    if source.is_dir():
        source = source / "backtest.json"
    try:
        with open(source, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputDataError(f"Failed to read backtest document {source}: {e}")
    if "windows" not in data:
        raise InputDataError(f"{source} is not a backtest document")
    return data
