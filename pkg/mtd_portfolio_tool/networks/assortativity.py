"""
Global and local assortativity of directed weighted networks
Extended Piraveenan, Sabek-Pigorsch edge/node and Peel multiscale measures
in the four (source mode, target mode) modalities
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import DegenerateAssortativityError, InputDataError
from .graph import DirectedNetwork, EdgeTable, edge_table
from .pagerank import multiscale_matrix, personalized_pagerank

VARIANCE_FLOOR = 1e-14
LOCAL_MEASURES = ("piraveenan", "sabek", "peel")


@dataclass(frozen=True)
class Modality:
    """(m1, m2): strength direction used at the source end and at the target end"""
    m1: str
    m2: str

    def __post_init__(self):
        if self.m1 not in ("in", "out") or self.m2 not in ("in", "out"):
            raise InputDataError(f"Invalid modality ({self.m1}, {self.m2})")

    @property
    def label(self) -> str:
        return f"{self.m1}-{self.m2}"

    @classmethod
    def parse(cls, value: Union[str, "Modality", Tuple[str, str]]) -> "Modality":
        if isinstance(value, Modality):
            return value
        if isinstance(value, tuple):
            return cls(*value)
        parts = str(value).strip().lower().split("-")
        if len(parts) != 2:
            raise InputDataError(f"Modality must look like 'out-in', got {value!r}")
        return cls(parts[0], parts[1])

    def __str__(self) -> str:
        return self.label


ALL_MODALITIES = tuple(Modality(a, b) for a in ("in", "out") for b in ("in", "out"))


@dataclass(frozen=True)
class AssortativityResult:
    measure: str
    modality: str
    rho_g: float
    rho_local: np.ndarray = field(default_factory=lambda: np.zeros(0))
    aux: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class _Moments:
    """Edge table plus the Omega-weighted moments shared by every measure"""
    table: EdgeTable
    omega: float
    mu_source: float
    mu_target: float
    ss_source: float  # sum w (es - mu)^2
    ss_target: float

    @property
    def sigma_source(self) -> float:
        return float(np.sqrt(self.ss_source / self.omega))

    @property
    def sigma_target(self) -> float:
        return float(np.sqrt(self.ss_target / self.omega))

    @property
    def denominator(self) -> float:
        return float(np.sqrt(self.ss_source) * np.sqrt(self.ss_target))

    def aux(self) -> Dict[str, float]:
        return {
            "mu_source": self.mu_source,
            "mu_target": self.mu_target,
            "sigma_source": self.sigma_source,
            "sigma_target": self.sigma_target,
        }


def _moments(net: DirectedNetwork, mode: Modality) -> _Moments:
    table = edge_table(net, mode.m1, mode.m2)
    if len(table) == 0:
        raise DegenerateAssortativityError(mode.label, "source", 0.0)
    w = table.weight
    omega = float(w.sum())
    mu_a = float(w @ table.es_source) / omega
    mu_b = float(w @ table.es_target) / omega
    ss_a = float(w @ (table.es_source - mu_a) ** 2)
    ss_b = float(w @ (table.es_target - mu_b) ** 2)
    if ss_a <= VARIANCE_FLOOR:
        raise DegenerateAssortativityError(mode.label, "source", ss_a)
    if ss_b <= VARIANCE_FLOOR:
        raise DegenerateAssortativityError(mode.label, "target", ss_b)
    return _Moments(table, omega, mu_a, mu_b, ss_a, ss_b)


def _edge_values(m: _Moments) -> np.ndarray:
    t = m.table
    return t.weight * (t.es_source - m.mu_source) * (t.es_target - m.mu_target) / m.denominator


def global_assortativity(net: DirectedNetwork, mode) -> AssortativityResult:
    """w-weighted Pearson correlation of source and target excess strengths over all edges"""
    mode = Modality.parse(mode)
    m = _moments(net, mode)
    rho = float(np.sum(_edge_values(m)))
    return AssortativityResult(measure="global", modality=mode.label, rho_g=rho, aux=m.aux())


def local_piraveenan(net: DirectedNetwork, mode) -> AssortativityResult:
    """
    Contribution of each node's out-edges to the global numerator

    rho_i = sum_{j in N(i)} w_ij es_i (es_j - mu_target) / denominator, with the
    denominator and target mean of the whole network. N(i) are the direct successors.
    """
    mode = Modality.parse(mode)
    m = _moments(net, mode)
    t = m.table
    contrib = t.weight * t.es_source * (t.es_target - m.mu_target) / m.denominator
    local = np.bincount(t.source, weights=contrib, minlength=net.n)
    return AssortativityResult(
        measure="piraveenan", modality=mode.label, rho_g=float(np.sum(_edge_values(m))),
        rho_local=local, aux=m.aux(),
    )


def edge_assortativity_sabek(net: DirectedNetwork, edge: Tuple[int, int], mode) -> float:
    """w_ij (es_i - mu_s)(es_j - mu_t) / (Omega sigma_s sigma_t) for one edge"""
    mode = Modality.parse(mode)
    i, j = edge
    if not (0 <= i < net.n and 0 <= j < net.n) or not net.has_edge(i, j):
        raise InputDataError(f"No edge {i} -> {j} in the network")
    m = _moments(net, mode)
    k = np.flatnonzero((m.table.source == i) & (m.table.target == j))[0]
    return float(_edge_values(m)[k])


def edge_assortativity_table(net: DirectedNetwork, mode) -> pd.DataFrame:
    """Every edge with its weight, excess strengths and Sabek-Pigorsch edge assortativity"""
    mode = Modality.parse(mode)
    m = _moments(net, mode)
    t = m.table
    return pd.DataFrame({
        "source": [net.tickers[k] for k in t.source],
        "target": [net.tickers[k] for k in t.target],
        "weight": t.weight,
        "es_source": t.es_source,
        "es_target": t.es_target,
        "edge_assortativity": _edge_values(m),
    })


def local_sabek(net: DirectedNetwork, mode) -> AssortativityResult:
    """rho_i = sum of the edge assortativities of node i's out-edges"""
    mode = Modality.parse(mode)
    m = _moments(net, mode)
    values = _edge_values(m)
    local = np.bincount(m.table.source, weights=values, minlength=net.n)
    return AssortativityResult(
        measure="sabek", modality=mode.label, rho_g=float(np.sum(values)),
        rho_local=local, aux=m.aux(),
    )


def _peel_terms(net: DirectedNetwork, m: _Moments) -> np.ndarray:
    t = m.table
    return (
        t.weight * (t.es_source - m.mu_source) * (t.es_target - m.mu_target)
        / (net.s_out[t.source] * m.sigma_source * m.sigma_target)
    )


def local_peel_with_weights(net: DirectedNetwork, mode, weights: np.ndarray) -> AssortativityResult:
    """
    Peel-style local assortativity for an arbitrary per-anchor node distribution

    weights[l, i] is the locality weight of source node i seen from anchor l.
    """
    mode = Modality.parse(mode)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (net.n, net.n):
        raise InputDataError("Locality weights must be an n x n matrix, one row per anchor")
    m = _moments(net, mode)
    local = weights[:, m.table.source] @ _peel_terms(net, m)
    rho_g = float(np.sum(_edge_values(m)))
    return AssortativityResult(measure="peel", modality=mode.label, rho_g=rho_g, rho_local=local, aux=m.aux())


def local_peel(net: DirectedNetwork, mode, quadrature_points: int = 21) -> AssortativityResult:
    """Peel measure with the multiscale (alpha-integrated) restart distribution of each anchor"""
    return local_peel_with_weights(net, mode, multiscale_matrix(net, quadrature_points))


def local_peel_alpha(net: DirectedNetwork, mode, alpha: float) -> AssortativityResult:
    """Peel measure at a single restart parameter, for diagnostics"""
    weights = np.vstack([personalized_pagerank(net, l, alpha).probs for l in range(net.n)])
    return local_peel_with_weights(net, mode, weights)


def compute_assortativity(
    net: DirectedNetwork, measure: str, mode, quadrature_points: int = 21
) -> AssortativityResult:
    """Dispatch on the measure name: global, piraveenan, sabek or peel"""
    if measure == "global":
        return global_assortativity(net, mode)
    if measure == "piraveenan":
        return local_piraveenan(net, mode)
    if measure == "sabek":
        return local_sabek(net, mode)
    if measure == "peel":
        return local_peel(net, mode, quadrature_points)
    raise InputDataError(f"Unknown assortativity measure {measure!r}")


def assortativity_frame(results: Iterable[AssortativityResult], tickers: List[str]) -> pd.DataFrame:
    """Long table ticker,measure,modality,rho_local with one GLOBAL row per result"""
    rows = []
    for res in results:
        for ticker, value in zip(tickers, res.rho_local):
            rows.append({"ticker": ticker, "measure": res.measure, "modality": res.modality,
                         "rho_local": float(value)})
        rows.append({"ticker": "GLOBAL", "measure": res.measure, "modality": res.modality,
                     "rho_local": res.rho_g})
    return pd.DataFrame(rows, columns=["ticker", "measure", "modality", "rho_local"])


def write_assortativity_csv(
    results: Iterable[AssortativityResult], tickers: List[str], path: Union[str, Path]
) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    assortativity_frame(results, tickers).to_csv(out, index=False, float_format="%.17g")
    return out
