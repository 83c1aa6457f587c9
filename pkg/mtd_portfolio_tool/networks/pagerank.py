"""
Random walks with restart on a DirectedNetwork
Personalized PageRank by power iteration and the multiscale (alpha-integrated) distribution
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from loguru import logger

from ..exceptions import ConvergenceError, InputDataError
from .graph import DirectedNetwork


@dataclass(frozen=True)
class NodeDistribution:
    """Probability vector over nodes anchored at node l"""
    probs: np.ndarray
    anchor: int
    alpha: Union[float, str]
    iterations: int = 0


def walk_matrix(net: DirectedNetwork) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row-normalized weights and the dangling-node mask

    Rows of dangling nodes are left at zero; callers route their mass back to
    the anchor.
    """
    dangling = net.s_out <= 0
    Q = np.divide(net.W, net.s_out[:, None], out=np.zeros((net.n, net.n)), where=~dangling[:, None])
    return Q, dangling


def personalized_pagerank(
    net: DirectedNetwork,
    l: int,
    alpha: float,
    tol: float = 1e-12,
    max_iters: int = 10000,
) -> NodeDistribution:
    """
    Stationary distribution of the walk that restarts at l with probability 1 - alpha

    Iterates pi <- (1 - alpha) e_l + alpha pi Q from pi = e_l, with dangling
    rows of Q replaced by e_l, until the L1 change is at most tol. At alpha = 1
    the lazy walk pi <- (pi + pi Q) / 2 is iterated instead; it has the same
    fixed point and does not oscillate on periodic graphs.
    """
    if not 0 <= l < net.n:
        raise InputDataError(f"Anchor {l} is not a node of the network")
    if not 0.0 <= alpha <= 1.0:
        raise InputDataError("alpha must lie in [0, 1]")

    Q, dangling = walk_matrix(net)
    Q[dangling, l] = 1.0
    restart = np.zeros(net.n)
    restart[l] = 1.0
    pi = restart.copy()
    if alpha == 0.0:
        return NodeDistribution(probs=pi, anchor=l, alpha=alpha)

    residual = np.inf
    for it in range(1, max_iters + 1):
        if alpha == 1.0:
            nxt = 0.5 * (pi + pi @ Q)
        else:
            nxt = (1.0 - alpha) * restart + alpha * (pi @ Q)
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual <= tol:
            pi = pi / pi.sum()
            logger.debug(f"pagerank anchor={l} alpha={alpha} converged in {it} iterations")
            return NodeDistribution(probs=pi, anchor=l, alpha=alpha, iterations=it)

    raise ConvergenceError(
        f"Personalized PageRank (anchor {l}, alpha {alpha}) did not converge in {max_iters} iterations",
        residual=residual,
    )


def quadrature_rule(points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped onto [0, 1]"""
    if points < 2:
        raise InputDataError("quadrature_points must be at least 2")
    x, c = np.polynomial.legendre.leggauss(points)
    return (x + 1.0) / 2.0, c / 2.0


def restart_distributions(net: DirectedNetwork, alpha: float) -> np.ndarray:
    """
    Personalized PageRank for every anchor at once, row l anchored at l (alpha < 1)

    With dangling rows restarting at the anchor, the fixed point is the
    normalized row l of (I - alpha Q)^-1 where Q has zero dangling rows.
    """
    if not 0.0 <= alpha < 1.0:
        raise InputDataError("The direct solve needs alpha in [0, 1)")
    Q, _ = walk_matrix(net)
    R = np.linalg.solve(np.eye(net.n) - alpha * Q.T, np.eye(net.n)).T
    return R / R.sum(axis=1, keepdims=True)


def multiscale_matrix(net: DirectedNetwork, quadrature_points: int = 21) -> np.ndarray:
    """Row l holds the multiscale distribution anchored at l"""
    nodes, weights = quadrature_rule(quadrature_points)
    total = np.zeros((net.n, net.n))
    for alpha, c in zip(nodes, weights):
        total += c * restart_distributions(net, float(alpha))
    return total / total.sum(axis=1, keepdims=True)


def multiscale_weights(net: DirectedNetwork, l: int, quadrature_points: int = 21) -> NodeDistribution:
    """Personalized PageRank integrated over alpha in [0, 1] by Gauss-Legendre quadrature"""
    if not 0 <= l < net.n:
        raise InputDataError(f"Anchor {l} is not a node of the network")
    probs = multiscale_matrix(net, quadrature_points)[l]
    return NodeDistribution(probs=probs, anchor=l, alpha="multiscale")
