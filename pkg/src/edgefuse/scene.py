"""Robots, edge servers and the geometry that turns scan coverage into overlap degrees.

Coverage is rasterized on a global lattice anchored at the world origin: cell
``(i, j)`` spans ``[i*res, (i+1)*res) x [j*res, (j+1)*res)`` and belongs to a
robot's coverage when its center lies within ``scan_radius`` of the route.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .costmodel import CostParams, CostProfile, FusionLatencyModel, load_profile

CellSet = frozenset  # frozenset[tuple[int, int]]


class ScenarioError(ValueError):
    """Scenario document failed validation; the message names the offending field."""


@dataclass(frozen=True)
class RobotSpec:
    id: int
    route: tuple[tuple[float, float], ...] | None
    scan_radius: float | None
    raw_frame_bytes: float
    map_bytes: float | None = None  # overrides the coverage-derived map size

    def __post_init__(self):
        if self.route is not None and len(self.route) == 0:
            raise ValueError(f"robot {self.id}: route must be non-empty")
        if self.scan_radius is not None and not self.scan_radius > 0:
            raise ValueError(f"robot {self.id}: scan_radius must be > 0")
        if not self.raw_frame_bytes > 0:
            raise ValueError(f"robot {self.id}: raw_frame_bytes must be > 0")
        if self.map_bytes is not None and not self.map_bytes > 0:
            raise ValueError(f"robot {self.id}: map_bytes must be > 0")
        if self.route is None and self.map_bytes is None:
            raise ValueError(f"robot {self.id}: needs a route or an explicit map_bytes")

    @property
    def has_geometry(self) -> bool:
        return self.route is not None and self.scan_radius is not None


@dataclass(frozen=True)
class EdgeServerSpec:
    id: int
    compute_scale: float
    uplink_bw_robot: float
    uplink_bw_cloud: float

    def __post_init__(self):
        if not self.compute_scale > 0:
            raise ValueError(f"edge {self.id}: compute_scale must be > 0")
        if not (self.uplink_bw_robot > 0 and self.uplink_bw_cloud > 0):
            raise ValueError(f"edge {self.id}: bandwidths must be > 0")


@dataclass(frozen=True, eq=False)
class Scene:
    """The world being scheduled.

    ``overlap`` optionally supplies the pairwise degrees directly, which
    bypasses rasterization entirely (random-matrix experiments).
    """

    robots: tuple[RobotSpec, ...]
    edges: tuple[EdgeServerSpec, ...]
    cloud_fusion_model: FusionLatencyModel
    raster_resolution: float = 0.05
    overlap: np.ndarray | None = field(default=None, repr=False)
    name: str = "scene"

    def __post_init__(self):
        if len(self.robots) < 1:
            raise ValueError("scene needs at least one robot")
        if len(self.edges) < 1:
            raise ValueError("scene needs at least one edge server")
        if not self.raster_resolution > 0:
            raise ValueError("raster_resolution must be > 0")
        if len({r.id for r in self.robots}) != len(self.robots):
            raise ValueError("robot ids must be unique")
        if len({e.id for e in self.edges}) != len(self.edges):
            raise ValueError("edge ids must be unique")
        if self.overlap is not None:
            w = np.asarray(self.overlap, dtype=float)
            validate_overlap_matrix(w, len(self.robots))
            w.setflags(write=False)
            object.__setattr__(self, "overlap", w)
        elif not all(r.has_geometry for r in self.robots):
            raise ValueError("robots without geometry require an explicit overlap matrix")

    @cached_property
    def coverages(self) -> tuple[CellSet, ...]:
        return tuple(coverage_region(r, self.raster_resolution) for r in self.robots)

    @cached_property
    def overlap_matrix(self) -> np.ndarray:
        if self.overlap is not None:
            return self.overlap
        w = build_overlap_matrix(self)
        w.setflags(write=False)
        return w

    @cached_property
    def map_sizes(self) -> np.ndarray:
        """Robot map sizes in bytes (one byte per known cell unless overridden)."""
        sizes = []
        for i, r in enumerate(self.robots):
            if r.map_bytes is not None:
                sizes.append(float(r.map_bytes))
            else:
                sizes.append(float(len(self.coverages[i])))
        return np.array(sizes)


def validate_overlap_matrix(w: np.ndarray, n: int) -> None:
    if w.shape != (n, n):
        raise ValueError(f"overlap_matrix must be {n}x{n}, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("overlap_matrix has non-finite entries")
    if np.any(np.diag(w) != 0):
        raise ValueError("overlap_matrix diagonal must be zero")
    if not np.array_equal(w, w.T):
        raise ValueError("overlap_matrix must be symmetric")
    if np.any(w < 0) or np.any(w > 0.5):
        raise ValueError("overlap degrees must lie in [0, 0.5]")


def _segment_distances(px, py, route: np.ndarray) -> np.ndarray:
    if len(route) == 1:
        return np.hypot(px - route[0, 0], py - route[0, 1])
    best = np.full(px.shape, np.inf)
    for (ax, ay), (bx, by) in zip(route[:-1], route[1:]):
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            t = np.zeros_like(px)
        else:
            t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
        np.minimum(best, np.hypot(px - (ax + t * dx), py - (ay + t * dy)), out=best)
    return best


def coverage_region(robot: RobotSpec, resolution: float) -> CellSet:
    """Cells whose centers lie within ``scan_radius`` of any point of the route."""
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    if not robot.has_geometry:
        raise ValueError(f"robot {robot.id} has no coverage geometry")
    route = np.asarray(robot.route, dtype=float).reshape(-1, 2)
    r = robot.scan_radius
    lo = np.floor((route.min(axis=0) - r) / resolution).astype(int) - 1
    hi = np.ceil((route.max(axis=0) + r) / resolution).astype(int) + 1
    ix = np.arange(lo[0], hi[0] + 1)
    iy = np.arange(lo[1], hi[1] + 1)
    gx, gy = np.meshgrid(ix, iy, indexing="ij")
    d = _segment_distances((gx + 0.5) * resolution, (gy + 0.5) * resolution, route)
    inside = d <= r
    return frozenset(zip(gx[inside].tolist(), gy[inside].tolist()))


def overlap_degree(a: CellSet, b: CellSet) -> float:
    """|a & b| / (|a| + |b|), which lies in [0, 0.5]."""
    if not a or not b:
        raise ValueError("overlap degree is undefined for an empty region")
    return len(a & b) / (len(a) + len(b))


def build_overlap_matrix(scene: Scene) -> np.ndarray:
    cov = scene.coverages
    n = len(cov)
    w = np.zeros((n, n))
    for u in range(n):
        for v in range(u + 1, n):
            w[u, v] = w[v, u] = overlap_degree(cov[u], cov[v])
    return w


def random_overlap_matrix(n: int, density: float = 0.3, weight_range=(0.0, 0.5), rng=None) -> np.ndarray:
    """Sparse symmetric degree matrix: each pair linked with probability ``density``,
    weights uniform on the half-open interval ``(lo, hi]``."""
    rng = np.random.default_rng(rng)
    lo, hi = weight_range
    if not (0.0 <= lo < hi <= 0.5):
        raise ValueError("weight_range must satisfy 0 <= lo < hi <= 0.5")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    iu = np.triu_indices(n, 1)
    links = rng.random(len(iu[0])) < density
    # 1 - U(0,1] maps [0,1) to (0,1]
    weights = lo + (hi - lo) * (1.0 - rng.random(len(iu[0])))
    w = np.zeros((n, n))
    w[iu] = np.where(links, weights, 0.0)
    return w + w.T


# --- scenario documents ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    """A scene together with the cost bundle it is evaluated under."""

    scene: Scene
    params: CostParams
    fusion_model: FusionLatencyModel
    profile: str


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where}: missing field '{key}'")
    return obj[key]


def _number(value, where: str, positive=True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if positive and not value > 0:
        raise ScenarioError(f"{where}: must be > 0")
    return float(value)


def _parse_robot(obj: Any, idx: int) -> RobotSpec:
    where = f"robots[{idx}]"
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    route = obj.get("route")
    if route is not None:
        try:
            pts = tuple((float(x), float(y)) for x, y in route)
        except (TypeError, ValueError):
            raise ScenarioError(f"{where}.route: expected a list of [x, y] points") from None
        if not pts:
            raise ScenarioError(f"{where}.route: must be non-empty")
        route = pts
    radius = obj.get("scan_radius")
    if radius is not None:
        radius = _number(radius, f"{where}.scan_radius")
    if (route is None) != (radius is None):
        raise ScenarioError(f"{where}: route and scan_radius must be given together")
    map_bytes = obj.get("map_bytes")
    if map_bytes is not None:
        map_bytes = _number(map_bytes, f"{where}.map_bytes")
    rid = _require(obj, "id", where)
    if isinstance(rid, bool) or not isinstance(rid, int):
        raise ScenarioError(f"{where}.id: expected an integer")
    try:
        return RobotSpec(
            id=rid,
            route=route,
            scan_radius=radius,
            raw_frame_bytes=_number(_require(obj, "raw_frame_bytes", where), f"{where}.raw_frame_bytes"),
            map_bytes=map_bytes,
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_edge(obj: Any, idx: int) -> EdgeServerSpec:
    where = f"edges[{idx}]"
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    eid = _require(obj, "id", where)
    if isinstance(eid, bool) or not isinstance(eid, int):
        raise ScenarioError(f"{where}.id: expected an integer")
    return EdgeServerSpec(
        id=eid,
        compute_scale=_number(obj.get("compute_scale", 1.0), f"{where}.compute_scale"),
        uplink_bw_robot=_number(_require(obj, "uplink_bw_robot", where), f"{where}.uplink_bw_robot"),
        uplink_bw_cloud=_number(_require(obj, "uplink_bw_cloud", where), f"{where}.uplink_bw_cloud"),
    )


def scenario_from_dict(doc: dict, profile: str | CostProfile | None = None) -> Scenario:
    """Validate a scenario document. ``profile`` overrides the document's ``cost_params``."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: expected a JSON object")
    robots = _require(doc, "robots", "scenario")
    edges = _require(doc, "edges", "scenario")
    if not isinstance(robots, list) or not robots:
        raise ScenarioError("scenario.robots: expected a non-empty list")
    if not isinstance(edges, list) or not edges:
        raise ScenarioError("scenario.edges: expected a non-empty list")
    robot_specs = tuple(_parse_robot(r, i) for i, r in enumerate(robots))
    edge_specs = tuple(_parse_edge(e, i) for i, e in enumerate(edges))

    if profile is None:
        profile = doc.get("cost_params", "wifi")
    try:
        prof = profile if isinstance(profile, CostProfile) else load_profile(profile)
    except (ValueError, KeyError, OSError) as exc:
        raise ScenarioError(f"scenario.cost_params: {exc}") from None

    overlap = doc.get("overlap_matrix")
    if overlap is not None:
        try:
            overlap = np.array(overlap, dtype=float)
        except (TypeError, ValueError):
            raise ScenarioError("scenario.overlap_matrix: expected a numeric square matrix") from None
    try:
        scene = Scene(
            robots=robot_specs,
            edges=edge_specs,
            cloud_fusion_model=prof.cloud_fusion,
            raster_resolution=_number(doc.get("raster_resolution", 0.05), "scenario.raster_resolution"),
            overlap=overlap,
            name=str(doc.get("name", "scene")),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"scenario: {exc}") from None
    return Scenario(scene=scene, params=prof.params, fusion_model=prof.edge_fusion, profile=prof.name)


def load_scenario(path: str | Path, profile: str | CostProfile | None = None) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc, profile)


def resolved_scenario_dict(scenario: Scenario, cost_params: str | None = None) -> dict:
    """Scenario document with the overlap matrix and map sizes made explicit."""
    scene = scenario.scene
    sizes = scene.map_sizes
    robots = []
    for r, size in zip(scene.robots, sizes):
        entry = {"id": r.id, "raw_frame_bytes": r.raw_frame_bytes, "map_bytes": float(size)}
        if r.has_geometry:
            entry["route"] = [list(p) for p in r.route]
            entry["scan_radius"] = r.scan_radius
        robots.append(entry)
    return {
        "name": scene.name,
        "raster_resolution": scene.raster_resolution,
        "cost_params": cost_params or scenario.profile,
        "robots": robots,
        "edges": [
            {"id": e.id, "compute_scale": e.compute_scale,
             "uplink_bw_robot": e.uplink_bw_robot, "uplink_bw_cloud": e.uplink_bw_cloud}
            for e in scene.edges
        ],
        "overlap_matrix": scene.overlap_matrix.tolist(),
    }


def matrix_scene(template: Scene, n_robots: int, overlap: np.ndarray, map_bytes: Sequence[float] | float | None = None,
                 raw_frame_bytes: float | None = None) -> Scene:
    """Scene of ``n_robots`` matrix-only robots sharing ``template``'s servers and cloud."""
    base = template.robots[0]
    if map_bytes is None:
        map_bytes = float(template.map_sizes.mean())
    sizes = np.broadcast_to(np.asarray(map_bytes, dtype=float), (n_robots,))
    robots = tuple(
        RobotSpec(id=i, route=None, scan_radius=None,
                  raw_frame_bytes=raw_frame_bytes or base.raw_frame_bytes, map_bytes=float(sizes[i]))
        for i in range(n_robots)
    )
    return Scene(robots=robots, edges=template.edges, cloud_fusion_model=template.cloud_fusion_model,
                 raster_resolution=template.raster_resolution, overlap=overlap,
                 name=f"{template.name}-R{n_robots}")
