"""End-to-end scheduling policies and their comparable latency reports."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import costmodel
from .costmodel import CostParams, FusionLatencyModel, LatencyBreakdown
from .grouping import initial_grouping
from .offload import assign, oracle_optimal_assignment, offload_cost, ORACLE_MAX_SERVERS
from .overlap_graph import Grouping, OverlapGraph, fitness
from .scene import Scene
from .tabu import TabuConfig, optimize

POLICIES = ("recslam", "greedy", "random", "cloud")

CSV_FIELDS = (
    "policy", "seed", "robots", "edges", "fitness", "total_latency_s", "sched_wall_ms",
    "max_edge_s", "max_upload_s", "cloud_fusion_s", "groups", "servers",
    "oracle_latency_s", "oracle_gap_s",
)


@dataclass
class ScheduleResult:
    policy: str
    seed: int | None
    grouping: Grouping | None
    assignment: list[int] | None
    total_latency: float
    breakdown: LatencyBreakdown
    fitness: float | None
    sched_wall_s: float
    n_robots: int
    n_edges: int
    params_digest: str = ""
    oracle_latency: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def oracle_gap(self) -> float | None:
        if self.oracle_latency is None:
            return None
        return self.total_latency - self.oracle_latency

    def csv_row(self, timing: bool = True) -> dict:
        b = self.breakdown
        groups = "" if self.grouping is None else "|".join(
            " ".join(str(v) for v in g) for g in self.grouping.groups())
        return {
            "policy": self.policy,
            "seed": "" if self.seed is None else self.seed,
            "robots": self.n_robots,
            "edges": self.n_edges,
            "fitness": "" if self.fitness is None else f"{self.fitness:.12g}",
            "total_latency_s": f"{self.total_latency:.12g}",
            "sched_wall_ms": f"{self.sched_wall_s * 1e3:.4f}" if timing else "",
            "max_edge_s": f"{max(b.edge_times):.12g}",
            "max_upload_s": f"{max(b.upload_times):.12g}",
            "cloud_fusion_s": f"{b.cloud_fusion:.12g}",
            "groups": groups,
            "servers": "" if self.assignment is None else " ".join(str(s) for s in self.assignment),
            "oracle_latency_s": "" if self.oracle_latency is None else f"{self.oracle_latency:.12g}",
            "oracle_gap_s": "" if self.oracle_gap is None else f"{self.oracle_gap:.12g}",
        }

    def to_dict(self, timing: bool = True) -> dict:
        b = self.breakdown
        return {
            "policy": self.policy,
            "seed": self.seed,
            "groups": None if self.grouping is None else self.grouping.groups(),
            "servers": self.assignment,
            "fitness": self.fitness,
            "total_latency_s": self.total_latency,
            "sched_wall_s": self.sched_wall_s if timing else None,
            "edge_times_s": list(b.edge_times),
            "upload_times_s": list(b.upload_times),
            "output_sizes_bytes": list(b.output_sizes),
            "cloud_fusion_s": b.cloud_fusion,
            "oracle_latency_s": self.oracle_latency,
            "meta": {"params_digest": self.params_digest, **self.meta},
        }


def _digest(scene: Scene, p: CostParams, m: FusionLatencyModel) -> str:
    return costmodel.CostProfile("", p, m, scene.cloud_fusion_model).digest()


def n_groups(scene: Scene) -> int:
    return min(len(scene.edges), len(scene.robots))


def _evaluators(scene: Scene, p: CostParams, m: FusionLatencyModel):
    sizes = scene.map_sizes
    w = scene.overlap_matrix

    def latency(group, server):
        return costmodel.edge_latency([scene.robots[i] for i in group], server, p, m)

    def size(group):
        return costmodel.estimate_group_output_size(group, sizes, w)

    return latency, size


def path_cost_matrix(groups, scene: Scene, p: CostParams, m: FusionLatencyModel) -> np.ndarray:
    """``C[i, j]``: fuse-and-upload time of group ``i`` on ``scene.edges[j]``."""
    latency, size = _evaluators(scene, p, m)
    return np.array([[offload_cost(g, e, latency, size) for e in scene.edges] for g in groups])


def attach_oracle(result: ScheduleResult, scene: Scene, p: CostParams, m: FusionLatencyModel) -> ScheduleResult:
    """Fill in the best total latency any server assignment could reach for ``result``'s grouping."""
    if result.grouping is None or len(scene.edges) > ORACLE_MAX_SERVERS:
        return result
    groups = result.grouping.groups()
    C = path_cost_matrix(groups, scene, p, m)
    col = {e.id: j for j, e in enumerate(scene.edges)}
    cloud = costmodel.predict_fusion_latency(scene.cloud_fusion_model, len(groups), 1.0)

    def cost(theta):
        return max(C[i, col[s]] for i, s in enumerate(theta)) + cloud

    _, best = oracle_optimal_assignment(groups, scene.edges, cost)
    result.oracle_latency = best
    return result


def _finish(policy, seed, scene, p, m, grouping, t_wall, latency, size) -> ScheduleResult:
    groups = grouping.groups()
    t0 = time.perf_counter()
    theta = assign(groups, scene.edges, latency, size)
    t_wall += time.perf_counter() - t0
    breakdown = costmodel.total_latency(groups, theta, scene, p, m)
    g = OverlapGraph.from_matrix(scene.overlap_matrix)
    return ScheduleResult(
        policy=policy, seed=seed, grouping=grouping, assignment=theta,
        total_latency=breakdown.total, breakdown=breakdown, fitness=fitness(g, grouping),
        sched_wall_s=t_wall, n_robots=len(scene.robots), n_edges=len(scene.edges),
        params_digest=_digest(scene, p, m),
    )


def run_recslam(scene: Scene, p: CostParams, m: FusionLatencyModel, cfg: TabuConfig | None = TabuConfig(),
                seed: int | None = None) -> ScheduleResult:
    """Balanced grouping, tabu refinement (skipped when ``cfg`` is None), greedy offloading.

    Wall time covers the three scheduling steps only; building the overlap
    matrix from geometry happens before the clock starts.
    """
    graph = OverlapGraph.from_matrix(scene.overlap_matrix)
    latency, size = _evaluators(scene, p, m)
    t0 = time.perf_counter()
    grouping = initial_grouping(graph, n_groups(scene))
    if cfg is not None:
        grouping = optimize(graph, grouping, cfg)
    t_wall = time.perf_counter() - t0
    return _finish("recslam", seed, scene, p, m, grouping, t_wall, latency, size)


def random_balanced_grouping(n: int, k: int, rng: np.random.Generator) -> Grouping:
    order = rng.permutation(n)
    a = np.empty(n, dtype=np.int64)
    a[order] = np.arange(n) % k
    return Grouping(a, k)


def run_random_baseline(scene: Scene, p: CostParams, m: FusionLatencyModel, seed: int = 0) -> ScheduleResult:
    """Random balanced grouping placed on randomly chosen distinct servers."""
    rng = np.random.default_rng(seed)
    latency, size = _evaluators(scene, p, m)
    t0 = time.perf_counter()
    k = n_groups(scene)
    grouping = random_balanced_grouping(len(scene.robots), k, rng)
    servers = [scene.edges[j].id for j in rng.permutation(len(scene.edges))[:k]]
    t_wall = time.perf_counter() - t0
    groups = grouping.groups()
    breakdown = costmodel.total_latency(groups, servers, scene, p, m)
    g = OverlapGraph.from_matrix(scene.overlap_matrix)
    return ScheduleResult(
        policy="random", seed=seed, grouping=grouping, assignment=servers,
        total_latency=breakdown.total, breakdown=breakdown, fitness=fitness(g, grouping),
        sched_wall_s=t_wall, n_robots=len(scene.robots), n_edges=len(scene.edges),
        params_digest=_digest(scene, p, m),
    )


def greedy_swap_pass(w: np.ndarray, grouping: Grouping, passes: int = 1) -> Grouping:
    """Visit robots in index order; move each to the group it overlaps most.

    Robot ``v`` leaves its group when some other group's members overlap it
    strictly more than its own group-mates do. It trades places with that
    group's member that is least attached to its own group (lowest index on ties).
    """
    a = grouping.assignment.copy()
    k = grouping.n_groups
    for _ in range(passes):
        for v in range(len(a)):
            aff = np.array([w[v, a == g].sum() for g in range(k)])
            own = a[v]
            aff_own = aff[own]
            aff[own] = -np.inf
            target = int(np.argmax(aff))
            if not aff[target] > aff_own:
                continue
            members = np.flatnonzero(a == target)
            attach = [w[u, members].sum() for u in members]
            u = int(members[int(np.argmin(attach))])
            a[u], a[v] = own, target
    return Grouping(a, k)


def run_greedy_baseline(scene: Scene, p: CostParams, m: FusionLatencyModel, seed: int = 0,
                        passes: int = 1) -> ScheduleResult:
    """Random balanced start, one ordered pass of overlap-seeking swaps, greedy offloading."""
    rng = np.random.default_rng(seed)
    latency, size = _evaluators(scene, p, m)
    t0 = time.perf_counter()
    grouping = random_balanced_grouping(len(scene.robots), n_groups(scene), rng)
    grouping = greedy_swap_pass(scene.overlap_matrix, grouping, passes)
    t_wall = time.perf_counter() - t0
    return _finish("greedy", seed, scene, p, m, grouping, t_wall, latency, size)


def run_cloud_baseline(scene: Scene, p: CostParams, m: FusionLatencyModel | None = None) -> ScheduleResult:
    """Every robot runs SLAM locally and the cloud fuses all maps."""
    breakdown = costmodel.cloud_baseline_latency(scene, p)
    return ScheduleResult(
        policy="cloud", seed=None, grouping=None, assignment=None,
        total_latency=breakdown.total, breakdown=breakdown, fitness=None,
        sched_wall_s=0.0, n_robots=len(scene.robots), n_edges=len(scene.edges),
        params_digest=_digest(scene, p, m) if m is not None else "",
    )


def run_policy(policy: str, scene: Scene, p: CostParams, m: FusionLatencyModel, seed: int | None = 0,
               tabu: TabuConfig | None = TabuConfig(), greedy_passes: int = 1) -> ScheduleResult:
    if policy == "recslam":
        return run_recslam(scene, p, m, tabu, seed)
    if policy == "random":
        return run_random_baseline(scene, p, m, seed or 0)
    if policy == "greedy":
        return run_greedy_baseline(scene, p, m, seed or 0, greedy_passes)
    if policy == "cloud":
        return run_cloud_baseline(scene, p, m)
    raise ValueError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
