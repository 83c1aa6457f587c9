"""
Directed weighted financial networks
Built from MTD mixing weights or, as a benchmark, from absolute correlations
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..data.marketdata import ReturnPanel
from ..exceptions import DegenerateDataError, InputDataError

NodeEnd = Literal["source", "target"]
StrengthMode = Literal["in", "out"]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DirectedNetwork:
    """
    Weighted digraph without self-loops

    W[i, j] is the weight of the edge i -> j; A, strengths, degrees and the
    total weight omega are derived once at construction.
    """
    tickers: List[str]
    W: np.ndarray
    A: np.ndarray = field(init=False)
    s_in: np.ndarray = field(init=False)
    s_out: np.ndarray = field(init=False)
    d_in: np.ndarray = field(init=False)
    d_out: np.ndarray = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        W = np.array(self.W, dtype=float, copy=True)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] != len(self.tickers):
            raise InputDataError("Weight matrix must be square with one row per ticker")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise InputDataError("Edge weights must be finite and nonnegative")
        np.fill_diagonal(W, 0.0)
        A = (W > 0).astype(float)
        object.__setattr__(self, "tickers", list(self.tickers))
        object.__setattr__(self, "W", _frozen(W))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "s_in", _frozen(W.sum(axis=0)))
        object.__setattr__(self, "s_out", _frozen(W.sum(axis=1)))
        object.__setattr__(self, "d_in", _frozen(A.sum(axis=0)))
        object.__setattr__(self, "d_out", _frozen(A.sum(axis=1)))
        object.__setattr__(self, "omega", float(W.sum()))

    @property
    def n(self) -> int:
        return len(self.tickers)

    @property
    def num_edges(self) -> int:
        return int(self.A.sum())

    def edges(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sources, targets, weights) of every edge in row-major order"""
        src, tgt = np.nonzero(self.W > 0)
        return src, tgt, self.W[src, tgt]

    def has_edge(self, i: int, j: int) -> bool:
        return i != j and self.W[i, j] > 0


@dataclass(frozen=True)
class EdgeContext:
    """One edge together with the excess strengths of its ends in a given mode pair"""
    source: int
    target: int
    weight: float
    es_source: float
    es_target: float


@dataclass(frozen=True)
class EdgeTable:
    """Vectorized EdgeContext over all edges"""
    source: np.ndarray
    target: np.ndarray
    weight: np.ndarray
    es_source: np.ndarray
    es_target: np.ndarray

    def __len__(self) -> int:
        return int(self.weight.size)

    def row(self, k: int) -> EdgeContext:
        return EdgeContext(int(self.source[k]), int(self.target[k]), float(self.weight[k]),
                           float(self.es_source[k]), float(self.es_target[k]))


def from_weights(W: np.ndarray, tickers: Optional[List[str]] = None) -> DirectedNetwork:
    W = np.asarray(W, dtype=float)
    labels = tickers if tickers is not None else [f"N{i + 1}" for i in range(W.shape[0])]
    return DirectedNetwork(tickers=list(labels), W=W)


def from_lambda(lambdas, tickers: Optional[List[str]] = None) -> DirectedNetwork:
    """W[i, j] = lambda_ij off the diagonal; accepts a LambdaMatrix or a plain array"""
    weights = getattr(lambdas, "weights", lambdas)
    return from_weights(np.asarray(weights, dtype=float), tickers)


def from_correlation(returns: ReturnPanel) -> DirectedNetwork:
    """W[i, j] = |pearson(r_i, r_j)| off the diagonal"""
    if returns.num_days < 3:
        raise InputDataError("At least 3 return rows are needed for correlations")
    flat = np.flatnonzero(np.ptp(returns.returns, axis=0) == 0)
    if flat.size:
        names = [returns.tickers[k] for k in flat]
        raise DegenerateDataError(f"Zero return variance for {names}; correlation undefined")
    if returns.num_assets == 1:
        return from_weights(np.zeros((1, 1)), returns.tickers)
    corr = np.abs(np.corrcoef(returns.returns, rowvar=False))
    corr = np.clip((corr + corr.T) / 2.0, 0.0, 1.0)
    return from_weights(corr, returns.tickers)


def _check_mode(value: str, allowed: tuple, label: str) -> None:
    if value not in allowed:
        raise InputDataError(f"{label} must be one of {allowed}, got {value!r}")


def excess_strength(net: DirectedNetwork, edge: Tuple[int, int], node_end: NodeEnd, mode: StrengthMode) -> float:
    """
    Strength of one end of an edge minus the weight of that edge in the matching direction

    source/out: s_out[i] - w_ij     source/in: s_in[i] - w_ji
    target/in:  s_in[j] - w_ij      target/out: s_out[j] - w_ji
    """
    _check_mode(node_end, ("source", "target"), "node_end")
    _check_mode(mode, ("in", "out"), "mode")
    i, j = edge
    if not (0 <= i < net.n and 0 <= j < net.n) or not net.has_edge(i, j):
        raise InputDataError(f"No edge {i} -> {j} in the network")
    W = net.W
    if node_end == "source":
        return float(net.s_out[i] - W[i, j]) if mode == "out" else float(net.s_in[i] - W[j, i])
    return float(net.s_in[j] - W[i, j]) if mode == "in" else float(net.s_out[j] - W[j, i])


def edge_table(net: DirectedNetwork, m1: StrengthMode, m2: StrengthMode) -> EdgeTable:
    """Excess strengths of every edge: source end in mode m1, target end in mode m2"""
    _check_mode(m1, ("in", "out"), "source mode")
    _check_mode(m2, ("in", "out"), "target mode")
    src, tgt, w = net.edges()
    reciprocal = net.W[tgt, src]
    es_src = net.s_out[src] - w if m1 == "out" else net.s_in[src] - reciprocal
    es_tgt = net.s_in[tgt] - w if m2 == "in" else net.s_out[tgt] - reciprocal
    return EdgeTable(source=src, target=tgt, weight=w, es_source=es_src, es_target=es_tgt)


def network_to_dict(net: DirectedNetwork) -> dict:
    return {"tickers": list(net.tickers), "W": net.W.tolist()}


def save_network(net: DirectedNetwork, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        json.dump(network_to_dict(net), f, indent=2)
    return out


def write_edge_list(net: DirectedNetwork, path: Union[str, Path]) -> Path:
    """Edge-list CSV source,target,weight with 17 significant digits"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    src, tgt, w = net.edges()
    frame = pd.DataFrame({
        "source": [net.tickers[k] for k in src],
        "target": [net.tickers[k] for k in tgt],
        "weight": w,
    })
    frame.to_csv(out, index=False, float_format="%.17g")
    return out


def read_edge_list(path: Union[str, Path], tickers: Optional[List[str]] = None) -> DirectedNetwork:
    """Inverse of write_edge_list; nodes without edges need an explicit ticker list"""
    try:
        frame = pd.read_csv(path, dtype={"source": str, "target": str}, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputDataError(f"Failed to read edge list {path}: {e}")
    if not {"source", "target", "weight"} <= set(frame.columns):
        raise InputDataError("Edge list needs source, target and weight columns")
    labels = list(tickers) if tickers else list(dict.fromkeys(list(frame["source"]) + list(frame["target"])))
    index = {t: k for k, t in enumerate(labels)}
    W = np.zeros((len(labels), len(labels)))
    try:
        for s, t, w in frame[["source", "target", "weight"]].itertuples(index=False):
            W[index[s], index[t]] = float(w)
    except KeyError as e:
        raise InputDataError(f"Edge list references unknown ticker {e}")
    return from_weights(W, labels)


def load_network(path: Union[str, Path]) -> DirectedNetwork:
    """
    Load a network from a network JSON, a fitted-model JSON or an edge-list CSV
    """
    network_path = Path(path)
    if network_path.suffix.lower() == ".csv":
        return read_edge_list(network_path)
    try:
        with open(network_path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputDataError(f"Failed to read network file {network_path}: {e}")
    if not isinstance(data, dict) or "tickers" not in data:
        raise InputDataError(f"{network_path} is neither a network nor a model document")
    if "W" in data:
        return from_weights(np.asarray(data["W"], dtype=float), data["tickers"])
    if "lambda" in data:
        return from_lambda(np.asarray(data["lambda"], dtype=float), data["tickers"])
    raise InputDataError(f"{network_path} holds no weight matrix")
