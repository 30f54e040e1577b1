"""Tabu-search refinement of a grouping by cross-group vertex swaps."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .overlap_graph import Grouping, OverlapGraph, fitness, group_affinity


@dataclass(frozen=True)
class TabuConfig:
    max_iterations: int = 100
    tabu_capacity: int = 10
    rng_seed: int = 0  # reserved for randomized restarts; the search itself is deterministic

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.tabu_capacity < 1:
            raise ValueError("tabu_capacity must be >= 1")


class TabuList:
    """FIFO of recently swapped pairs; appending past capacity evicts the oldest."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: deque[tuple[int, int]] = deque()

    @staticmethod
    def key(u: int, v: int) -> tuple[int, int]:
        return (u, v) if u < v else (v, u)

    def push(self, pair):
        pair = self.key(*pair)
        if pair in self._entries:
            return
        self._entries.append(pair)
        while len(self._entries) > self.capacity:
            self._entries.popleft()

    def remove(self, pair):
        self._entries.remove(self.key(*pair))

    def refresh(self, pair):
        """Move ``pair`` to the young end."""
        pair = self.key(*pair)
        if pair in self._entries:
            self._entries.remove(pair)
        self.push(pair)

    def __contains__(self, pair):
        return self.key(*pair) in self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)


def swap_deltas(w: np.ndarray, assignment: np.ndarray, n_groups: int) -> np.ndarray:
    """Fitness change for swapping every vertex pair (``inf`` for same-group pairs).

    Moving ``u`` from group ``a`` to ``b`` and ``v`` the other way changes the
    cut by ``A[u,a] - A[u,b] + A[v,b] - A[v,a] + 2 w[u,v]``, where ``A`` holds
    each vertex's weight into each group.
    """
    A = group_affinity(w, assignment, n_groups)
    own = A[np.arange(len(assignment)), assignment]
    cross = A[:, assignment]  # cross[u, v] = A[u, group(v)]
    delta = own[:, None] - cross + own[None, :] - cross.T + 2.0 * w
    same = assignment[:, None] == assignment[None, :]
    delta[same] = np.inf
    delta[np.tril_indices(len(assignment))] = np.inf
    return delta


def optimize(g: OverlapGraph, p0: Grouping, cfg: TabuConfig = TabuConfig(), trace: list | None = None) -> Grouping:
    """Return the best grouping seen over ``cfg.max_iterations`` swap moves.

    Each iteration evaluates every cross-group swap and moves to the cheapest
    admissible one, even if it is worse than the current grouping. A tabu pair
    is admissible only when it beats the best fitness so far. When nothing is
    admissible, the oldest tabu pair that is still a valid swap is taken.
    ``trace``, if given, receives ``(pair, fitness, tabu_length)`` per iteration.
    """
    if len(p0) != g.n:
        raise ValueError("grouping does not match the graph")
    if not p0.is_balanced():
        raise ValueError("initial grouping must be balanced")
    if cfg.max_iterations == 0 or p0.n_groups == 1:
        return p0

    w = g.matrix
    current = p0
    best, best_fit = p0, fitness(g, p0)
    tabu = TabuList(cfg.tabu_capacity)
    for _ in range(cfg.max_iterations):
        cur_fit = fitness(g, current)
        delta = swap_deltas(w, current.assignment, current.n_groups)
        cand_fit = cur_fit + delta
        admissible = np.isfinite(delta)
        for u, v in tabu:
            if np.isfinite(delta[u, v]) and not cand_fit[u, v] < best_fit:
                admissible[u, v] = False
        if admissible.any():
            masked = np.where(admissible, cand_fit, np.inf)
            flat = int(np.argmin(masked))  # row-major: lexicographically smallest pair on ties
            pair = divmod(flat, g.n)
            fallback = False
        else:
            valid = [pr for pr in tabu if np.isfinite(delta[pr])]
            if not valid:
                break
            pair = valid[0]
            fallback = True
        nxt = current.swapped(*pair)
        nxt_fit = fitness(g, nxt)
        if nxt_fit < best_fit:
            if pair in tabu:
                tabu.remove(pair)
            best, best_fit = nxt, nxt_fit
        if fallback:
            tabu.refresh(pair)
        else:
            tabu.push(pair)
        current = nxt
        if trace is not None:
            trace.append((pair, nxt_fit, len(tabu)))
    return best
