"""Balanced initial grouping of robot maps.

Groups ``0..N-2`` are filled round-robin, one vertex per group per pass. A
pass seeds from the candidate with the fewest remaining neighbors when the
frontier buffer is empty, and otherwise takes the frontier vertex whose
migration gain into the current group is largest. Filling stops once at most
``V/N`` candidates remain; they form the last group.
"""
from __future__ import annotations

import heapq
from collections.abc import Collection

import numpy as np

from .overlap_graph import Grouping, OverlapGraph

GAIN_TIE_TOL = 1e-12


def gain(g: OverlapGraph, v: int, current_group: Collection[int], candidates: Collection[int]) -> float:
    """Weight pulled into ``current_group`` minus weight left behind among the candidates."""
    if v not in candidates:
        raise ValueError(f"vertex {v} is not a candidate")
    pulled = sum(g.weight(u, v) for u in current_group)
    left = sum(g.weight(u, v) for u in candidates if u != v)
    return pulled - left


def initial_grouping(g: OverlapGraph, n_groups: int, literal: bool = False) -> Grouping:
    """Balanced grouping with group sizes differing by at most one.

    With ``literal=True`` the max-gain vertex is drawn from every remaining
    candidate instead of only the frontier buffer.
    """
    V = g.n
    if n_groups < 1:
        raise ValueError("need at least one group")
    if n_groups > V:
        raise ValueError(f"cannot split {V} vertices into {n_groups} non-empty groups")
    assignment = np.full(V, n_groups - 1, dtype=np.int64)
    if n_groups == 1:
        return Grouping(assignment, 1)

    adjacency = [[(u, g.weight(u, v)) for u in sorted(g.adjacency[v])] for v in range(V)]
    group_of = np.full(V, -1, dtype=np.int64)
    in_c = np.ones(V, dtype=bool)
    frontier: set[int] = set()
    nbr_in_c = np.array([len(nb) for nb in adjacency], dtype=np.int64)
    to_candidates = np.array([sum(wt for _, wt in nb) for nb in adjacency])
    to_group = np.zeros((n_groups, V))
    # lazy min-heap of (remaining neighbor count, vertex); counts only ever drop
    heap = [(int(nbr_in_c[v]), v) for v in range(V)]
    heapq.heapify(heap)
    remaining = V
    limit = V / n_groups

    def take(v: int, i: int):
        nonlocal remaining
        group_of[v] = i
        in_c[v] = False
        frontier.discard(v)
        remaining -= 1
        for u, wt in adjacency[v]:
            to_candidates[u] -= wt
            to_group[i, u] += wt
            if in_c[u]:
                nbr_in_c[u] -= 1
                heapq.heappush(heap, (int(nbr_in_c[u]), u))
                frontier.add(u)

    def least_neighbors() -> int:
        while True:
            count, v = heap[0]
            if in_c[v] and count == nbr_in_c[v]:
                return v
            heapq.heappop(heap)

    def max_gain(i: int) -> int:
        pool = np.flatnonzero(in_c) if literal else np.fromiter(sorted(frontier), dtype=np.int64)
        gains = to_group[i, pool] - to_candidates[pool]
        # the running sums carry rounding noise; gains this close count as a tie
        near = gains >= gains.max() - GAIN_TIE_TOL
        return int(pool[np.argmax(near)])

    done = False
    while not done:
        seeding = not frontier
        for i in range(n_groups - 1):
            if seeding or not (in_c.any() if literal else frontier):
                v = least_neighbors()
            else:
                v = max_gain(i)
            take(v, i)
            if remaining <= limit:
                done = True
                break
    assignment[group_of >= 0] = group_of[group_of >= 0]
    return Grouping(assignment, n_groups)
