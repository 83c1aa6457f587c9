"""
Multivariate Mixture Transition Distribution model
Cross-series transition matrices, simplex-constrained mixing weights,
one-step forecasts and simulation
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from loguru import logger

from ..data.marketdata import StatePanel
from ..exceptions import InputDataError
from .simplex import project_simplex, random_simplex_points

LOG_FLOOR = 1e-300
ARMIJO_SLOPE = 1e-4


def _frozen(array: np.ndarray, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TransitionTensor:
    """p[i, j, h, k] = P(S_j(t+1) = k | S_i(t) = h) with the counts it came from"""
    probs: np.ndarray
    counts: np.ndarray
    smoothing: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 4 or probs.shape[0] != probs.shape[1] or probs.shape[2] != probs.shape[3]:
            raise InputDataError(f"Transition tensor must have shape (n, n, z, z), got {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1 + 1e-12):
            raise InputDataError("Transition probabilities must lie in [0, 1]")
        if not np.allclose(probs.sum(axis=-1), 1.0, atol=1e-9):
            raise InputDataError("Every transition row must sum to 1")
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "counts", _frozen(np.broadcast_to(self.counts, probs.shape), dtype=float))

    @property
    def num_series(self) -> int:
        return self.probs.shape[0]

    @property
    def num_states(self) -> int:
        return self.probs.shape[2]


@dataclass(frozen=True)
class LambdaMatrix:
    """Mixing weights; column j is the simplex vector of influences on series j"""
    weights: np.ndarray
    loglik: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        n = weights.shape[0] if weights.ndim == 2 else -1
        if weights.ndim != 2 or weights.shape[1] != n:
            raise InputDataError("Lambda must be a square matrix")
        if np.any(weights < -1e-12) or not np.allclose(weights.sum(axis=0), 1.0, atol=1e-9):
            raise InputDataError("Every lambda column must lie on the simplex")
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "loglik", _frozen(np.broadcast_to(self.loglik, (n,))))
        object.__setattr__(self, "converged", _frozen(np.broadcast_to(self.converged, (n,)), dtype=bool))
        object.__setattr__(self, "iterations", _frozen(np.broadcast_to(self.iterations, (n,)), dtype=int))

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "LambdaMatrix":
        n = np.asarray(weights).shape[0]
        return cls(weights=weights, loglik=np.full(n, np.nan), converged=np.ones(n, dtype=bool),
                   iterations=np.zeros(n, dtype=int))


@dataclass(frozen=True)
class MtdModel:
    """A fitted model: both estimation steps plus the labels they were fitted on"""
    tickers: List[str]
    transitions: TransitionTensor
    lambdas: LambdaMatrix

    @property
    def num_states(self) -> int:
        return self.transitions.num_states

    def to_dict(self) -> dict:
        return {
            "tickers": list(self.tickers),
            "num_states": self.num_states,
            "lambda": self.lambdas.weights.tolist(),
            "probs": self.transitions.probs.tolist(),
            "loglik": self.lambdas.loglik.tolist(),
            "converged": self.lambdas.converged.tolist(),
            "smoothing": self.transitions.smoothing,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MtdModel":
        try:
            tickers = [str(t) for t in data["tickers"]]
            weights = np.asarray(data["lambda"], dtype=float)
            probs = np.asarray(data["probs"], dtype=float)
            n = len(tickers)
            loglik = np.asarray(data.get("loglik", [np.nan] * n), dtype=float)
            converged = np.asarray(data.get("converged", [True] * n), dtype=bool)
            smoothing = float(data.get("smoothing", 0.0))
        except (KeyError, TypeError, ValueError) as e:
            raise InputDataError(f"Malformed model document: {e}")
        if weights.shape != (n, n) or probs.shape[:2] != (n, n):
            raise InputDataError("Model arrays do not match the ticker list")
        if probs.shape[2] != int(data["num_states"]):
            raise InputDataError("Model probs do not match num_states")
        return cls(
            tickers=tickers,
            transitions=TransitionTensor(probs=probs, counts=np.zeros(probs.shape), smoothing=smoothing),
            lambdas=LambdaMatrix(weights=weights, loglik=loglik, converged=converged,
                                 iterations=np.zeros(n, dtype=int)),
        )


def save_model(model: MtdModel, path: Union[str, Path]) -> Path:
    """Write the model JSON; floats use the shortest exact repr"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        json.dump(model.to_dict(), f, indent=2)
    return out


def load_model(path: Union[str, Path]) -> MtdModel:
    model_path = Path(path)
    try:
        with open(model_path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputDataError(f"Failed to read model file {model_path}: {e}")
    return MtdModel.from_dict(data)


def _one_hot(states: np.ndarray, z: int) -> np.ndarray:
    return np.eye(z)[states]


def estimate_transition_matrices(states: StatePanel, smoothing: float = 1.0) -> TransitionTensor:
    """
    Count cross-series transitions and row-normalize

    counts[i, j, h, k] = #{t : S_i(t) = h and S_j(t+1) = k}. Rows that stay
    empty after smoothing fall back to uniform.
    """
    if states.num_days < 2:
        raise InputDataError("At least 2 state rows are needed to count transitions")
    if smoothing < 0:
        raise InputDataError("smoothing must be nonnegative")

    z = states.num_states
    S = states.states
    counts = np.einsum("tih,tjk->ijhk", _one_hot(S[:-1], z), _one_hot(S[1:], z))
    smoothed = counts + smoothing
    totals = smoothed.sum(axis=-1, keepdims=True)
    probs = np.divide(smoothed, totals, out=np.full(smoothed.shape, 1.0 / z), where=totals > 0)
    return TransitionTensor(probs=probs, counts=counts, smoothing=smoothing)


def _column_factors(states: np.ndarray, probs: np.ndarray, j: int) -> np.ndarray:
    """M[t, i] = p[i, j, S_i(t), S_j(t+1)], the per-source likelihood of each observed step"""
    n = states.shape[1]
    src = states[:-1]
    tgt = states[1:, j]
    return probs[np.arange(n)[None, :], j, src, tgt[:, None]]


def _loglik(M: np.ndarray, lam: np.ndarray) -> float:
    return float(np.sum(np.log(np.maximum(M @ lam, LOG_FLOOR))))


def mtd_log_likelihood(states: StatePanel, P: TransitionTensor, lambda_col: np.ndarray, j: int) -> float:
    """sum_t ln(sum_i lambda_ij p[i, j, S_i(t), S_j(t+1)]) with the mixture floored at 1e-300"""
    lam = np.asarray(lambda_col, dtype=float)
    if lam.shape != (states.num_assets,):
        raise InputDataError("lambda column length must equal the number of series")
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-9:
        raise InputDataError("lambda column must lie on the simplex")
    return _loglik(_column_factors(states.states, P.probs, j), lam)


def _ascend_column(M: np.ndarray, start: np.ndarray, max_iters: int, tol: float):
    """
    Projected gradient ascent of the mean log-likelihood on the simplex

    Armijo backtracking keeps every accepted step non-decreasing. Stops when
    the projected-gradient mapping ||lam - P(lam + grad)|| drops to tol.

    Returns:
        (lam, mean loglik, converged, iterations)
    """
    m = M.shape[0]

    def value(lam):
        return _loglik(M, lam) / m

    def gradient(lam):
        mix = M @ lam
        inv = np.divide(1.0, mix, out=np.zeros_like(mix), where=mix > 0)
        return M.T @ inv / m

    lam = start.copy()
    f = value(lam)
    step = 1.0
    for it in range(max_iters):
        g = gradient(lam)
        if np.linalg.norm(lam - project_simplex(lam + g)) <= tol:
            return lam, f, True, it
        while True:
            cand = project_simplex(lam + step * g)
            fc = value(cand)
            if fc >= f + ARMIJO_SLOPE * float(g @ (cand - lam)):
                break
            step *= 0.5
            if step < 1e-20:
                # no representable ascent left
                return lam, f, False, it
        lam, f = cand, fc
        step = min(step * 2.0, 1e6)
    return lam, f, False, max_iters


def estimate_lambda(
    states: StatePanel,
    P: TransitionTensor,
    max_iters: int = 5000,
    tol: float = 1e-7,
    restarts: int = 3,
    seed: int = 0,
) -> LambdaMatrix:
    """
    Maximum-likelihood mixing weights, one independent problem per target column

    Each column starts from the barycenter and from `restarts` uniform simplex
    draws seeded with seed + column index; the best log-likelihood wins and
    exact ties keep the earliest start.

    Returns:
        LambdaMatrix with per-column log-likelihood (sum, not mean), a
        convergence flag and the iteration count of the winning start
    """
    if states.num_days < 2:
        raise InputDataError("At least 2 state rows are needed to estimate lambda")
    n = states.num_assets
    if P.num_series != n or P.num_states != states.num_states:
        raise InputDataError("Transition tensor does not match the state panel")

    weights = np.zeros((n, n))
    loglik = np.zeros(n)
    converged = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=int)
    m = states.num_days - 1

    for j in range(n):
        M = _column_factors(states.states, P.probs, j)
        if n == 1:
            weights[:, j] = 1.0
            loglik[j] = _loglik(M, weights[:, j])
            converged[j] = True
            continue

        rng = np.random.default_rng(seed + j)
        starts = np.vstack([np.full(n, 1.0 / n), random_simplex_points(rng, n, restarts)])
        best = None
        for start in starts:
            lam, f, ok, its = _ascend_column(M, start, max_iters, tol)
            if best is None or f > best[1]:
                best = (lam, f, ok, its)

        weights[:, j] = best[0]
        loglik[j] = best[1] * m
        converged[j] = best[2]
        iterations[j] = best[3]
        logger.debug(f"lambda column {j}: loglik={loglik[j]:.6f} iterations={best[3]}")

    stalled = np.flatnonzero(~converged)
    if stalled.size:
        logger.warning(
            f"lambda columns {stalled.tolist()} stopped before reaching tol={tol}; best iterate kept"
        )
    return LambdaMatrix(weights=weights, loglik=loglik, converged=converged, iterations=iterations)


def fit_mtd(
    states: StatePanel,
    smoothing: float = 1.0,
    max_iters: int = 5000,
    tol: float = 1e-7,
    restarts: int = 3,
    seed: int = 0,
) -> MtdModel:
    """Transition counts first, then mixing weights given those transitions"""
    P = estimate_transition_matrices(states, smoothing)
    lambdas = estimate_lambda(states, P, max_iters=max_iters, tol=tol, restarts=restarts, seed=seed)
    return MtdModel(tickers=list(states.tickers), transitions=P, lambdas=lambdas)


def one_step_distribution(
    P: TransitionTensor, lambdas: LambdaMatrix, current: Sequence[np.ndarray]
) -> List[np.ndarray]:
    """D_j(t+1) = sum_i lambda_ij D_i(t) P[i, j]"""
    n, z = P.num_series, P.num_states
    D = np.asarray(current, dtype=float)
    if D.shape != (n, z):
        raise InputDataError(f"Expected {n} distributions over {z} states")
    if np.any(D < 0) or not np.allclose(D.sum(axis=1), 1.0, atol=1e-12):
        raise InputDataError("Every current distribution must be a probability vector")
    nxt = np.einsum("ij,ih,ijhk->jk", lambdas.weights, D, P.probs)
    nxt = nxt / nxt.sum(axis=1, keepdims=True)
    return [row for row in nxt]


def mtd_simulate(
    P: TransitionTensor,
    lambdas: LambdaMatrix,
    num_steps: int,
    seed: int = 0,
    initial: Optional[np.ndarray] = None,
    tickers: Optional[List[str]] = None,
) -> StatePanel:
    """
    Sample a state path from the mixture

    Each S_j(t+1) is drawn from sum_i lambda_ij p[i, j, S_i(t), :] by inverse
    CDF on a single uniform per series and step.
    """
    n, z = P.num_series, P.num_states
    if num_steps < 1:
        raise InputDataError("num_steps must be at least 1")
    rng = np.random.default_rng(seed)
    path = np.empty((num_steps, n), dtype=np.int64)
    path[0] = rng.integers(z, size=n) if initial is None else np.asarray(initial, dtype=np.int64)

    rows_i = np.arange(n)[:, None]
    cols_j = np.arange(n)[None, :]
    for t in range(num_steps - 1):
        rows = P.probs[rows_i, cols_j, path[t][:, None], :]
        mix = np.einsum("ij,ijk->jk", lambdas.weights, rows)
        cdf = np.cumsum(mix, axis=1)
        u = rng.random(n)
        # count of cdf entries <= u, i.e. searchsorted(side="right") per row
        draws = np.sum(cdf <= u[:, None], axis=1)
        path[t + 1] = np.minimum(draws, z - 1)

    labels = tickers if tickers is not None else [f"S{i + 1}" for i in range(n)]
    dates = [str(t) for t in range(num_steps)]
    return StatePanel(dates=dates, tickers=list(labels), states=path, num_states=z)
