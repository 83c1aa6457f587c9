"""
Scatter data behind the node and edge assortativity profiles, rebuilt from a backtest document
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..exceptions import DegenerateAssortativityError, InputDataError
from ..networks.assortativity import edge_assortativity_table
from ..networks.graph import DirectedNetwork, from_weights
from .loess import PlotProfile, loess_smooth

PROFILE_KINDS = ("node-profile", "edge-profile")


def node_excess_out_strength(net: DirectedNetwork) -> np.ndarray:
    """Mean of s_out_i - w_ij over the out-edges of each node, 0 without out-edges"""
    d = net.d_out
    safe = np.where(d > 0, d, 1.0)
    return np.where(d > 0, net.s_out - net.s_out / safe, 0.0)


def _window_network(window: dict) -> DirectedNetwork:
    network = window.get("network")
    if not network or "W" not in network:
        raise InputDataError(f"Window {window.get('window')} carries no network")
    return from_weights(np.asarray(network["W"], dtype=float), network["tickers"])


def node_profile_points(document: dict, measure: str, modality: str) -> Tuple[np.ndarray, np.ndarray]:
    """(excess out-strength, local assortativity) for every (window, node) pair"""
    xs, ys = [], []
    for window in document["windows"]:
        for entry in window.get("assortativity", []):
            if entry["measure"] == measure and entry["modality"] == modality:
                net = _window_network(window)
                xs.append(node_excess_out_strength(net))
                ys.append(np.asarray(entry["rho_local"], dtype=float))
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


def edge_profile_points(document: dict, modality: str) -> Tuple[np.ndarray, np.ndarray]:
    """(edge weight, edge assortativity) for every (window, edge) pair; degenerate windows are skipped"""
    xs, ys = [], []
    for window in document["windows"]:
        if window.get("network") is None:
            logger.debug(f"Window {window.get('window')} has no network; skipped in edge profile")
            continue
        net = _window_network(window)
        try:
            table = edge_assortativity_table(net, modality)
        except DegenerateAssortativityError as e:
            logger.debug(f"Window {window.get('window')} skipped in edge profile: {e}")
            continue
        xs.append(table["weight"].to_numpy())
        ys.append(table["edge_assortativity"].to_numpy())
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


def build_profiles(
    document: dict,
    kind: str,
    measures: Optional[Sequence[str]] = None,
    modalities: Optional[Sequence[str]] = None,
    span: float = 0.75,
    grid: int = 100,
    market: Optional[str] = None,
) -> List[PlotProfile]:
    """
    Loess-smoothed profiles, one per (measure, modality) for node profiles
    and one per modality for edge profiles

    Args:
        document: Parsed backtest.json
        kind: node-profile or edge-profile
        measures, modalities: Restrict the series; default to the run's settings
        span, grid: Loess parameters
        market: Label carried in the series key (defaults to the run's market)

    Returns:
        List of PlotProfile
    """
    if kind not in PROFILE_KINDS:
        raise InputDataError(f"Unknown profile kind {kind!r}; choose from {list(PROFILE_KINDS)}")
    config = document.get("config", {})
    measures = list(measures or config.get("measures", []))
    modalities = list(modalities or config.get("modalities", []))
    market = market or config.get("market", "custom")

    profiles = []
    if kind == "node-profile":
        series = [(m, mode, *node_profile_points(document, m, mode)) for m in measures for mode in modalities]
    else:
        series = [("sabek", mode, *edge_profile_points(document, mode)) for mode in modalities]

    for measure, modality, x, y in series:
        if x.size == 0:
            logger.warning(f"No data for {kind} {measure} {modality}; profile skipped")
            continue
        key = {"kind": kind, "measure": measure, "modality": modality, "market": market}
        profiles.append(loess_smooth(x, y, span=span, grid=grid, key=key))
    if not profiles:
        raise InputDataError(f"The backtest document holds no data for a {kind}")
    return profiles
