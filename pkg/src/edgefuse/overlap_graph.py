"""Weighted overlapping graph and grouping quality measures."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class OverlapGraph:
    """Undirected graph over robot maps; a link's weight is the pair's overlap degree.

    Weights live in a sparse dict keyed on ``(u, v)`` with ``u < v``; a dense
    copy backs the vectorized queries used by the search loops.
    """

    def __init__(self, n_vertices: int, weights: dict[tuple[int, int], float] | None = None):
        if n_vertices < 0:
            raise ValueError("vertex count must be >= 0")
        self.n = n_vertices
        self.weights: dict[tuple[int, int], float] = {}
        self.adjacency: list[set[int]] = [set() for _ in range(n_vertices)]
        for (u, v), w in (weights or {}).items():
            if u == v:
                if w != 0:
                    raise ValueError("self-loops are not allowed")
                continue
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"link ({u}, {v}) out of range")
            if w < 0:
                raise ValueError("weights must be >= 0")
            if w == 0:
                continue
            key = (min(u, v), max(u, v))
            if key in self.weights and self.weights[key] != w:
                raise ValueError(f"conflicting weights for link {key}")
            self.weights[key] = float(w)
            self.adjacency[u].add(v)
            self.adjacency[v].add(u)

    @classmethod
    def from_matrix(cls, w) -> OverlapGraph:
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        if not np.array_equal(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        iu, iv = np.nonzero(np.triu(w, 1))
        return cls(w.shape[0], {(int(u), int(v)): float(w[u, v]) for u, v in zip(iu, iv)})

    @property
    def link_count(self) -> int:
        return len(self.weights)

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (u, v), w in self.weights.items():
            m[u, v] = m[v, u] = w
        m.setflags(write=False)
        return m

    def weight(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        return self.weights.get((min(u, v), max(u, v)), 0.0)

    def total_weight(self) -> float:
        return sum(self.weights.values())

    def neighbors(self, v: int) -> set[int]:
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range")
        return set(self.adjacency[v])

    def __repr__(self):
        return f"OverlapGraph(V={self.n}, L={self.link_count})"


@dataclass(frozen=True, eq=False)
class Grouping:
    """Vertex -> group map; groups are numbered ``0..n_groups-1``."""

    assignment: np.ndarray
    n_groups: int

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise ValueError("assignment must be a vector")
        if self.n_groups < 1:
            raise ValueError("need at least one group")
        if a.size and (a.min() < 0 or a.max() >= self.n_groups):
            raise ValueError("group index out of range")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_groups(cls, groups, n_vertices: int | None = None) -> Grouping:
        groups = [list(g) for g in groups]
        if n_vertices is None:
            n_vertices = sum(len(g) for g in groups)
        a = np.full(n_vertices, -1, dtype=np.int64)
        for gi, members in enumerate(groups):
            for v in members:
                if a[v] != -1:
                    raise ValueError(f"vertex {v} appears in two groups")
                a[v] = gi
        if np.any(a < 0):
            raise ValueError("some vertices are not assigned to a group")
        return cls(a, len(groups))

    def __len__(self):
        return len(self.assignment)

    def __eq__(self, other):
        return (isinstance(other, Grouping) and self.n_groups == other.n_groups
                and np.array_equal(self.assignment, other.assignment))

    def __hash__(self):
        return hash((self.n_groups, self.assignment.tobytes()))

    def groups(self) -> list[list[int]]:
        out = [[] for _ in range(self.n_groups)]
        for v, g in enumerate(self.assignment.tolist()):
            out[g].append(v)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_groups)

    def is_balanced(self) -> bool:
        s = self.sizes()
        return int(s.max() - s.min()) <= 1

    def swapped(self, u: int, v: int) -> Grouping:
        a = self.assignment.copy()
        a[u], a[v] = a[v], a[u]
        return Grouping(a, self.n_groups)

    def __repr__(self):
        return f"Grouping({self.groups()})"


def _check(g: OverlapGraph, p: Grouping):
    if len(p) != g.n:
        raise ValueError(f"grouping covers {len(p)} vertices, graph has {g.n}")


def fitness(g: OverlapGraph, p: Grouping) -> float:
    """Total weight of links whose endpoints sit in different groups (lower is better)."""
    _check(g, p)
    a = p.assignment
    return sum(w for (u, v), w in g.weights.items() if a[u] != a[v])


def in_group_weight(g: OverlapGraph, p: Grouping, i: int) -> float:
    _check(g, p)
    if not 0 <= i < p.n_groups:
        raise IndexError(f"group {i} out of range")
    a = p.assignment
    return sum(w for (u, v), w in g.weights.items() if a[u] == i and a[v] == i)


def group_affinity(w: np.ndarray, assignment: np.ndarray, n_groups: int) -> np.ndarray:
    """``A[x, k]`` = summed weight from vertex ``x`` into group ``k``."""
    onehot = np.zeros((len(assignment), n_groups))
    onehot[np.arange(len(assignment)), assignment] = 1.0
    return w @ onehot
