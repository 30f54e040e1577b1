"""Latency and size terms of the robot -> edge -> cloud pipeline.

All times are seconds, sizes bytes, bandwidths bytes/second. A *group* is a
sequence of robot indices into ``scene.robots``.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .scene import EdgeServerSpec, RobotSpec, Scene

PROFILE_DIR_ENV = "EDGEFUSE_PROFILE_DIR"


@dataclass(frozen=True)
class CostParams:
    t_pack: float = 0.02
    t_frame: float = 0.05
    robot_uplink_bw: float = 1.75e6
    local_slam_latency: float = 1.51
    cloud_uplink_bw_robot: float = 7.0e3

    def __post_init__(self):
        for name in ("t_pack", "t_frame", "local_slam_latency"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("robot_uplink_bw", "cloud_uplink_bw_robot"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FusionLatencyModel:
    """Fusion time for ``k`` input maps: ``alpha*k**2 + beta*k + gamma``."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if self.alpha == 0 and self.beta < 0:
            raise ValueError("a falling linear model turns negative for large k")
        if self.min_latency() < 0:
            raise ValueError("fusion model predicts negative latency for some k >= 1")

    def min_latency(self) -> float:
        """Smallest prediction over integer k >= 1 (the polynomial is convex)."""
        ks = [1]
        if self.alpha > 0:
            vertex = min(max(-self.beta / (2 * self.alpha), 1.0), 1e12)
            ks += [int(np.floor(vertex)), int(np.ceil(vertex))]
        return min(self.alpha * k * k + self.beta * k + self.gamma for k in ks)

    def __call__(self, k: int, compute_scale: float = 1.0) -> float:
        return predict_fusion_latency(self, k, compute_scale)


@dataclass(frozen=True)
class CostProfile:
    name: str
    params: CostParams
    edge_fusion: FusionLatencyModel
    cloud_fusion: FusionLatencyModel

    def digest(self) -> str:
        import hashlib

        blob = json.dumps(
            [asdict(self.params), asdict(self.edge_fusion), asdict(self.cloud_fusion)], sort_keys=True
        )
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


def robot_map_latency(r: RobotSpec, e: EdgeServerSpec, p: CostParams) -> float:
    """Pack, ship and frame-transform one robot's payload on server ``e``."""
    bw = min(p.robot_uplink_bw, e.uplink_bw_robot)
    return p.t_pack + r.raw_frame_bytes / bw + p.t_frame


def predict_fusion_latency(m: FusionLatencyModel, k: int, compute_scale: float = 1.0) -> float:
    if k < 1:
        raise ValueError("fusion needs at least one map")
    return compute_scale * (m.alpha * k * k + m.beta * k + m.gamma)


def pairwise_checks(k: int) -> int:
    """Number of pairwise matchings when fusing ``k`` maps."""
    return k * (k - 1) // 2


def estimate_group_output_size(group: Sequence[int], sizes, w) -> float:
    """Merged map size by inclusion-exclusion truncated after the pairwise terms.

    The shared bytes of a pair follow from the degree definition,
    ``w[i, j] * (size_i + size_j)``. The estimate is clamped to
    ``[max size, sum of sizes]``.
    """
    group = list(group)
    if not group:
        raise ValueError("cannot size an empty group")
    sizes = np.asarray(sizes, dtype=float)
    s = sizes[group]
    total = float(s.sum())
    shared = 0.0
    for a in range(len(group)):
        for b in range(a + 1, len(group)):
            i, j = group[a], group[b]
            shared += float(w[i, j]) * (sizes[i] + sizes[j])
    return min(max(total - shared, float(s.max())), total)


def edge_latency(robots: Sequence[RobotSpec], e: EdgeServerSpec, p: CostParams, m: FusionLatencyModel) -> float:
    """Time until server ``e`` has fused the edge map of ``robots``."""
    if not robots:
        raise ValueError("cannot evaluate an empty group")
    ready = max(robot_map_latency(r, e, p) for r in robots)
    return ready + predict_fusion_latency(m, len(robots), e.compute_scale)


@dataclass(frozen=True)
class LatencyBreakdown:
    total: float
    server_ids: tuple[int, ...]
    edge_times: tuple[float, ...]
    upload_times: tuple[float, ...]
    output_sizes: tuple[float, ...]
    cloud_fusion: float

    @property
    def paths(self) -> tuple[float, ...]:
        return tuple(a + b for a, b in zip(self.edge_times, self.upload_times))


def total_latency(groups: Sequence[Sequence[int]], assignment: Sequence[int], scene: Scene,
                  p: CostParams, m: FusionLatencyModel) -> LatencyBreakdown:
    """End-to-end time: slowest edge path (fuse + upload) plus global fusion in the cloud."""
    if len(assignment) != len(groups):
        raise ValueError("every group needs exactly one server")
    if len(set(assignment)) != len(assignment):
        raise ValueError("a server was assigned more than one group")
    servers = {e.id: e for e in scene.edges}
    sizes = scene.map_sizes
    w = scene.overlap_matrix
    edge_t, up_t, out = [], [], []
    for group, sid in zip(groups, assignment):
        if sid not in servers:
            raise ValueError(f"unknown server id {sid}")
        e = servers[sid]
        t_e = edge_latency([scene.robots[i] for i in group], e, p, m)
        size = estimate_group_output_size(group, sizes, w)
        edge_t.append(t_e)
        up_t.append(float(size / e.uplink_bw_cloud))
        out.append(float(size))
    cloud = predict_fusion_latency(scene.cloud_fusion_model, len(groups), 1.0)
    total = max(a + b for a, b in zip(edge_t, up_t)) + cloud
    return LatencyBreakdown(total, tuple(assignment), tuple(edge_t), tuple(up_t), tuple(out), cloud)


def cloud_baseline_latency(scene: Scene, p: CostParams) -> LatencyBreakdown:
    """Robots run SLAM locally, upload their maps, and the cloud fuses all of them at once."""
    uploads = tuple(float(s) / p.cloud_uplink_bw_robot for s in scene.map_sizes)
    local = tuple(p.local_slam_latency for _ in uploads)
    cloud = predict_fusion_latency(scene.cloud_fusion_model, len(scene.robots), 1.0)
    total = max(a + b for a, b in zip(local, uploads)) + cloud
    return LatencyBreakdown(total, (), local, uploads, tuple(float(s) for s in scene.map_sizes), cloud)


# --- profiles ----------------------------------------------------------------


def _profile_from_dict(name: str, d: dict) -> CostProfile:
    fields = {k: float(d[k]) for k in CostParams.__dataclass_fields__ if k in d}
    edge = d.get("edge_fusion", {})
    cloud = d.get("cloud_fusion")
    edge_model = FusionLatencyModel(float(edge["alpha"]), float(edge["beta"]), float(edge["gamma"]))
    if cloud is None:
        scale = float(d.get("cloud_compute_scale", 0.25))
        cloud_model = FusionLatencyModel(edge_model.alpha * scale, edge_model.beta * scale, edge_model.gamma * scale)
    else:
        cloud_model = FusionLatencyModel(float(cloud["alpha"]), float(cloud["beta"]), float(cloud["gamma"]))
    return CostProfile(name=name, params=CostParams(**fields), edge_fusion=edge_model, cloud_fusion=cloud_model)


def _presets(doc: dict) -> dict:
    return doc.get("presets", {})


def _search_files() -> list[Path]:
    files = []
    env = os.environ.get(PROFILE_DIR_ENV)
    if env:
        files += sorted(Path(env).glob("*.json"))
    return files


def builtin_profiles() -> dict:
    text = resources.files("edgefuse").joinpath("data/profiles.json").read_text()
    return json.loads(text)


def load_profile(source: str | dict = "wifi") -> CostProfile:
    """Resolve a cost profile from a preset name, a JSON file path or an inline dict.

    Preset names are looked up in ``$EDGEFUSE_PROFILE_DIR/*.json`` first, then in
    the bundled presets.
    """
    if isinstance(source, dict):
        if "presets" in source:
            raise ValueError("inline cost_params must be a single preset, not a preset table")
        base = _presets(builtin_profiles())["wifi"]
        return _profile_from_dict(source.get("name", "inline"), {**base, **source})
    path = Path(source)
    if path.suffix == ".json" and path.is_file():
        doc = json.loads(path.read_text())
        if "presets" in doc:
            name = doc.get("default") or next(iter(doc["presets"]))
            return _profile_from_dict(name, doc["presets"][name])
        return _profile_from_dict(doc.get("name", path.stem), doc)
    for f in _search_files():
        presets = _presets(json.loads(f.read_text()))
        if source in presets:
            return _profile_from_dict(source, presets[source])
    presets = _presets(builtin_profiles())
    if source not in presets:
        raise KeyError(f"unknown cost profile {source!r}; known: {', '.join(sorted(presets))}")
    return _profile_from_dict(source, presets[source])
