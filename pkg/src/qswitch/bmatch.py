"""Capacitated b-matchings of the complete client graph under a global budget.

An allocation assigns a nonnegative integer multiplicity to every unordered
node pair ``(i, j)`` with ``i < j``. It is feasible when the multiplicities
sum to at most ``budget`` and every node ``i`` is incident to at most
``caps[i]`` units. The same structure describes BSA station allocations in the
EGS (capacities = multiplexing degrees) and swap schedules in the memory
switch (capacities = heralded links per client).
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

from qswitch.errors import ParameterDomainError, ProblemSizeError

__all__ = [
    "Allocation",
    "CapacityVector",
    "MAX_ORACLE_NODES",
    "MAX_ORACLE_CAPACITY",
    "emax_closed_form",
    "greedy_max_allocation",
    "brute_force_max",
    "max_weight_allocation",
    "is_feasible",
    "allocation_size",
]

MAX_ORACLE_NODES = 8
MAX_ORACLE_CAPACITY = 24

Pair = tuple[int, int]
Allocation = dict[Pair, int]


@dataclass(frozen=True)
class CapacityVector:
    caps: tuple[int, ...]
    budget: int

    def __init__(self, caps: Sequence[int], budget: int) -> None:
        caps = tuple(int(c) for c in caps)
        if len(caps) < 2:
            raise ParameterDomainError("caps", caps, "need at least two nodes")
        if any(c < 0 for c in caps):
            raise ParameterDomainError("caps", caps, "capacities must be >= 0")
        if budget < 0:
            raise ParameterDomainError("budget", budget, "must be >= 0")
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "budget", int(budget))

    @property
    def n_nodes(self) -> int:
        return len(self.caps)

    def pairs(self) -> list[Pair]:
        return list(itertools.combinations(range(self.n_nodes), 2))


def allocation_size(alloc: Mapping[Pair, int]) -> int:
    return sum(alloc.values())


def is_feasible(cv: CapacityVector, alloc: Mapping[Pair, int]) -> bool:
    """Check both the global budget and every per-node capacity."""
    load = [0] * cv.n_nodes
    for (i, j), x in alloc.items():
        if not (0 <= i < j < cv.n_nodes) or x < 0:
            return False
        load[i] += x
        load[j] += x
    return allocation_size(alloc) <= cv.budget and all(l <= c for l, c in zip(load, cv.caps))


def emax_closed_form(cv: CapacityVector) -> int:
    """Maximum cardinality ``min{B, floor(T/2), T - max_i caps_i}`` with ``T = sum(caps)``."""
    total = sum(cv.caps)
    return min(cv.budget, total // 2, total - max(cv.caps))


def _add(alloc: Allocation, u: int, v: int) -> None:
    key = (u, v) if u < v else (v, u)
    alloc[key] = alloc.get(key, 0) + 1


def greedy_max_allocation(cv: CapacityVector) -> Allocation:
    """Constructive maximum-cardinality allocation.

    If the largest node can absorb everything else (``T - max <= floor(T/2)``)
    every other unit is paired with it (star). Otherwise two nodes with the
    largest residual capacities are paired repeatedly, lowest index first on
    ties. Either construction stops after ``budget`` pairs.
    """
    caps = list(cv.caps)
    total = sum(caps)
    alloc: Allocation = {}
    if cv.budget == 0 or total == 0:
        return alloc
    if total - max(caps) <= total // 2:
        hub = caps.index(max(caps))
        made = 0
        for j, c in enumerate(caps):
            if j == hub:
                continue
            take = min(c, cv.budget - made)
            if take > 0:
                alloc[(min(hub, j), max(hub, j))] = take
                made += take
            if made == cv.budget:
                break
        return alloc

    residual = caps
    for _ in range(cv.budget):
        # stable sort: equal residuals keep index order
        order = sorted(range(len(residual)), key=lambda i: -residual[i])
        u, v = order[0], order[1]
        if residual[v] == 0:
            break
        _add(alloc, u, v)
        residual[u] -= 1
        residual[v] -= 1
    return alloc


def _check_oracle_size(cv: CapacityVector) -> None:
    if cv.n_nodes > MAX_ORACLE_NODES or sum(cv.caps) > MAX_ORACLE_CAPACITY:
        raise ProblemSizeError(
            f"exhaustive search limited to {MAX_ORACLE_NODES} nodes and total capacity "
            f"{MAX_ORACLE_CAPACITY}; got {cv.n_nodes} nodes, total {sum(cv.caps)}"
        )


def _search(cv: CapacityVector, weights: tuple[float, ...]) -> tuple[float, Allocation]:
    """Exact maximum of ``sum w_e x_e`` over every feasible integer allocation.

    Depth-first over edges in lexicographic order; at each edge every
    multiplicity from the largest feasible down to zero is tried. Subproblems
    are memoized on (edge index, residual capacities of nodes still having
    edges, usable budget); the budget is clipped at ``floor(residual/2)``,
    beyond which it can never bind. Ties keep the first optimum found, i.e.
    the lexicographically largest allocation in edge order.
    """
    pairs = cv.pairs()
    n_edges = len(pairs)
    first_node = [i for i, _ in pairs]

    @lru_cache(maxsize=None)
    def best(e: int, residual: tuple[int, ...], budget: int) -> tuple[float, tuple[int, ...]]:
        if e == n_edges or budget == 0:
            return 0.0, ()
        i, j = pairs[e]
        top = min(residual[i], residual[j], budget)
        best_val, best_tail = -1.0, ()
        for x in range(top, -1, -1):
            res = list(residual)
            res[i] -= x
            res[j] -= x
            nxt = e + 1
            if nxt < n_edges:
                # nodes before the next edge's first endpoint have no edges left
                for k in range(first_node[e], first_node[nxt]):
                    res[k] = 0
            left = budget - x
            left = min(left, sum(res) // 2)
            val, tail = best(nxt, tuple(res), left)
            val += weights[e] * x
            if val > best_val:
                best_val, best_tail = val, (x, *tail)
        return best_val, best_tail

    value, xs = best(0, cv.caps, min(cv.budget, sum(cv.caps) // 2))
    alloc = {pairs[e]: x for e, x in enumerate(xs) if x > 0}
    return value, alloc


def brute_force_max(cv: CapacityVector) -> tuple[int, Allocation]:
    """Exhaustive maximum cardinality with one witness allocation.

    Independent of the closed form; used as its test oracle. Raises
    ``ProblemSizeError`` above 8 nodes or total capacity 24.
    """
    _check_oracle_size(cv)
    value, alloc = _search(cv, (1.0,) * len(cv.pairs()))
    return int(value), alloc


def max_weight_allocation(cv: CapacityVector, weights: Mapping[Pair, float]) -> tuple[float, Allocation]:
    """Exact maximum-weight feasible allocation (support function of the region).

    ``weights`` maps pairs ``(i, j)`` with ``i < j`` to nonnegative reals;
    missing pairs weigh zero. Exhaustive, so it respects integrality even
    where the LP relaxation does not (odd cycles).
    """
    _check_oracle_size(cv)
    pairs = cv.pairs()
    for key, w in weights.items():
        if key not in set(pairs):
            raise ParameterDomainError("weights", key, "keys must be pairs (i, j) with i < j")
        if w < 0:
            raise ParameterDomainError("weights", w, "must be >= 0")
    w = tuple(float(weights.get(p, 0.0)) for p in pairs)
    value, alloc = _search(cv, w)
    # drop zero-weight edges from the witness so all-zero weights give an empty allocation
    alloc = {p: x for p, x in alloc.items() if weights.get(p, 0.0) > 0}
    return value, alloc
