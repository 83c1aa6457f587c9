"""
Branch-and-bound over the selection vector y and the support-pruning heuristic
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np
from loguru import logger

from .problem import PortfolioProblem, better

PRUNE_SLACK = 1e-9
CLOSE_GAP = 1e-7


@dataclass(frozen=True)
class _Node:
    fixed1: FrozenSet[int]
    fixed0: FrozenSet[int]
    bound: float
    x: np.ndarray

    def free(self, n: int) -> Tuple[int, ...]:
        return tuple(i for i in range(n) if i not in self.fixed1 and i not in self.fixed0)


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    support: Tuple[int, ...]
    closed: bool
    nodes: int
    gap: float


class BranchAndBound:
    """
    Exact search over supports

    Nodes fix some y to 1 or 0; the relaxation bound of the PortfolioProblem
    prunes them. Incumbents only come from per-support solves, so the best
    value found is exactly what enumerating every support would report.
    """

    def __init__(self, problem: PortfolioProblem, max_nodes: int = 20000):
        self.problem = problem
        self.max_nodes = max_nodes
        self.best_value = -np.inf
        self.best_support: Optional[Tuple[int, ...]] = None
        self.best_x: Optional[np.ndarray] = None
        self._counter = itertools.count()

    def _offer(self, support) -> None:
        support = tuple(sorted(int(i) for i in support))
        if not support or len(support) > self.problem.max_support:
            return
        x, value = self.problem.solve_support(support)
        if better(value, support, self.problem.n, self.best_value, self.best_support):
            self.best_value, self.best_support, self.best_x = value, support, x

    def _make(self, fixed1, fixed0) -> Optional[_Node]:
        n = self.problem.n
        free = [i for i in range(n) if i not in fixed1 and i not in fixed0]
        bound, x = self.problem.relaxation(fixed1, free)
        if not np.isfinite(bound) and bound < 0:
            return None
        return _Node(frozenset(fixed1), frozenset(fixed0), bound, x)

    def _pruned(self, node: _Node) -> bool:
        return node.bound + PRUNE_SLACK < self.best_value - 1e-10

    def _round(self, node: _Node) -> Tuple[int, ...]:
        """Support suggested by the relaxed point: fixed ones plus free weights >= gamma / 2"""
        p = self.problem
        free = node.free(p.n)
        keep = [i for i in free if node.x[i] >= p.gamma / 2]
        room = p.max_support - len(node.fixed1)
        keep = sorted(keep, key=lambda i: (-node.x[i], i))[:max(room, 0)]
        support = set(node.fixed1) | set(keep)
        if not support and free:
            support = {max(free, key=lambda i: (node.x[i], -i))}
        return tuple(sorted(support))

    def _branch_variable(self, node: _Node) -> Optional[int]:
        p = self.problem
        free = node.free(p.n)
        if not free:
            return None
        x = node.x

        fractional = [i for i in free if 0 < x[i] < p.gamma]
        if fractional:
            return min(fractional, key=lambda i: (abs(x[i] - p.gamma / 2), i))

        selected = [i for i in free if x[i] > 0]
        if len(node.fixed1) + len(selected) > p.max_support:
            return min(selected, key=lambda i: (x[i], i))

        if p.form == "simple":
            rho = p.rho
            relaxed = np.where(rho > 0, rho * x, rho)
            actual = np.where(x > 0, rho, 0.0)
            mismatch = {i: abs(actual[i] - relaxed[i]) for i in free}
            worst = max(free, key=lambda i: (mismatch[i], -i))
            if mismatch[worst] > 1e-12:
                return worst

        if p.objective == "utility":
            # relaxed point is feasible and its relaxed value is exact
            return None
        return max(free, key=lambda i: (x[i], -i))

    def solve(self) -> SearchResult:
        p = self.problem
        root = self._make(frozenset(), frozenset())
        nodes = 0
        heap = []
        stack = []
        if root is not None:
            stack.append(root)

        while stack or heap:
            if nodes >= self.max_nodes:
                break
            if stack:
                node = stack.pop()
            else:
                _, _, node = heapq.heappop(heap)
            nodes += 1
            if self._pruned(node):
                continue

            self._offer(self._round(node))
            free = node.free(p.n)
            if not free:
                self._offer(node.fixed1)
                continue

            var = self._branch_variable(node)
            if var is None:
                continue

            children = []
            one = self._make(node.fixed1 | {var}, node.fixed0)
            zero = self._make(node.fixed1, node.fixed0 | {var})
            for child in (zero, one):
                if child is not None and not self._pruned(child):
                    children.append(child)

            if self.best_support is None:
                # dive until a first incumbent exists
                stack.extend(sorted(children, key=lambda c: c.bound))
            else:
                heap.extend((-c.bound, next(self._counter), c) for c in children)
                heapq.heapify(heap)
                if stack:
                    heap.extend((-c.bound, next(self._counter), c) for c in stack)
                    heapq.heapify(heap)
                    stack.clear()

        open_bounds = [c.bound for c in stack] + [-k for k, _, _ in heap]
        remaining = max(open_bounds) if open_bounds else -np.inf
        gap = max(remaining - self.best_value, 0.0) if np.isfinite(remaining) else 0.0
        closed = not open_bounds or gap <= CLOSE_GAP
        if not closed:
            logger.warning(f"Branch-and-bound stopped at the node limit ({self.max_nodes}) with gap {gap:.3e}")
        logger.debug(f"branch-and-bound explored {nodes} nodes, incumbent {self.best_value:.10g}")

        if self.best_support is None:
            # every node infeasible or pruned before an incumbent; fall back to the best single asset
            for i in range(p.n):
                self._offer((i,))
        return SearchResult(self.best_x, self.best_value, self.best_support, closed, nodes, gap)


def support_heuristic(problem: PortfolioProblem) -> SearchResult:
    """
    Relax, drop weights below gamma / 2, re-solve on the survivors, repeat to a fixed point,
    then solve the surviving support exactly
    """
    active = tuple(range(problem.n))
    for _ in range(problem.n):
        x = problem.relaxed_point(active)
        keep = [i for i in active if x[i] >= problem.gamma / 2]
        keep = sorted(keep, key=lambda i: (-x[i], i))[:problem.max_support]
        if not keep:
            keep = [max(active, key=lambda i: (x[i], -i))]
        keep = tuple(sorted(keep))
        if keep == active:
            break
        active = keep
    if len(active) > problem.max_support:
        active = tuple(sorted(active[:problem.max_support]))
    x, value = problem.solve_support(active)
    return SearchResult(x, value, active, False, 0, np.nan)
