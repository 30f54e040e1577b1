"""Placing robot groups on heterogeneous edge servers."""
from __future__ import annotations

import itertools
from typing import Callable, Sequence

from .scene import EdgeServerSpec

ORACLE_MAX_SERVERS = 8

LatencyFn = Callable[[Sequence[int], EdgeServerSpec], float]
SizeFn = Callable[[Sequence[int]], float]


def offload_cost(group, server: EdgeServerSpec, latency: LatencyFn, size: SizeFn) -> float:
    """Fuse time on ``server`` plus the time to ship the merged map to the cloud."""
    return latency(group, server) + size(group) / server.uplink_bw_cloud


def assign(groups: Sequence[Sequence[int]], servers: Sequence[EdgeServerSpec],
           latency: LatencyFn, size: SizeFn) -> list[int]:
    """Greedy placement: each group in index order takes the cheapest server still free.

    Returns server ids, one per group. Ties go to the lowest server id; surplus
    servers stay idle.
    """
    if len(groups) > len(servers):
        raise ValueError(f"{len(groups)} groups but only {len(servers)} servers")
    pool = sorted(servers, key=lambda s: s.id)
    theta = []
    for group in groups:
        costs = [offload_cost(group, s, latency, size) for s in pool]
        j = min(range(len(pool)), key=lambda k: (costs[k], pool[k].id))
        theta.append(pool.pop(j).id)
    return theta


def oracle_optimal_assignment(groups: Sequence[Sequence[int]], servers: Sequence[EdgeServerSpec],
                              cost: Callable[[tuple[int, ...]], float]) -> tuple[list[int], float]:
    """Exhaustive search over injective group -> server maps for the minimum total latency.

    ``cost`` maps a tuple of server ids (one per group) to the end-to-end latency.
    Ties resolve to the lexicographically smallest id tuple.
    """
    if len(servers) > ORACLE_MAX_SERVERS:
        raise ValueError(
            f"oracle enumerates permutations of at most {ORACLE_MAX_SERVERS} servers; "
            f"got {len(servers)}, reduce the instance")
    if len(groups) > len(servers):
        raise ValueError(f"{len(groups)} groups but only {len(servers)} servers")
    ids = sorted(s.id for s in servers)
    best, best_cost = None, float("inf")
    for theta in itertools.permutations(ids, len(groups)):
        c = cost(theta)
        if c < best_cost:
            best, best_cost = theta, c
    return list(best), best_cost
