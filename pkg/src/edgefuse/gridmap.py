"""Occupancy grids, pose-aligned map fusion and fusion-latency profiling.

Maps share a world frame, so fusion needs no feature matching or transform
search: every pair gets an overlap check (bounding box, then known-cell
intersection), overlapping maps are linked into components with union-find,
and all maps are composed onto the union bounding box with
OCCUPIED > FREE > UNKNOWN precedence.
"""
from __future__ import annotations

import gc
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from .costmodel import FusionLatencyModel

UNKNOWN, FREE, OCCUPIED = -1, 0, 100  # ROS OccupancyGrid codes; their order is the merge precedence

PGM_OCCUPIED, PGM_FREE, PGM_UNKNOWN = 0, 254, 205
_LATTICE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """``cells[y, x]``; row 0 is the bottom row, located at ``origin`` in world meters."""

    cells: np.ndarray
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        c = np.array(self.cells, dtype=np.int8)
        if c.ndim != 2:
            raise ValueError("cells must be a 2-D array")
        if not np.isin(c, (UNKNOWN, FREE, OCCUPIED)).all():
            raise ValueError("cells must be UNKNOWN, FREE or OCCUPIED")
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def known(self) -> np.ndarray:
        return self.cells != UNKNOWN

    def lattice_index(self) -> tuple[int, int]:
        """Index of cell (0, 0) on the world lattice of this resolution."""
        out = []
        for o in self.origin:
            f = o / self.resolution
            r = round(f)
            if abs(f - r) > _LATTICE_TOL:
                raise ValueError(f"origin {self.origin} is not aligned to the {self.resolution} m lattice")
            out.append(int(r))
        return out[0], out[1]

    def content_equal(self, other: OccupancyGrid) -> bool:
        """Same resolution and the same known cells at the same world positions."""
        if self.resolution != other.resolution:
            return False
        return np.array_equal(_known_cells(self), _known_cells(other))

    def __repr__(self):
        return f"OccupancyGrid({self.width}x{self.height} @ {self.resolution} m, origin={self.origin})"


def _known_cells(m: OccupancyGrid) -> np.ndarray:
    x0, y0 = m.lattice_index()
    ys, xs = np.nonzero(m.known)
    rows = np.stack([xs + x0, ys + y0, m.cells[ys, xs]], axis=1)
    return rows[np.lexsort(rows.T[::-1])]


def known_size_bytes(m: OccupancyGrid) -> int:
    """Canonical map size: one byte per known cell."""
    return int(np.count_nonzero(m.cells != UNKNOWN))


def _check_resolutions(maps: Sequence[OccupancyGrid]) -> float:
    if not maps:
        raise ValueError("need at least one map")
    res = maps[0].resolution
    for m in maps[1:]:
        if m.resolution != res:
            raise ValueError(f"mixed resolutions: {res} vs {m.resolution}")
    return res


def _bbox(m: OccupancyGrid) -> tuple[int, int, int, int]:
    x0, y0 = m.lattice_index()
    return x0, y0, x0 + m.width, y0 + m.height


def _overlap_views(a: OccupancyGrid, b: OccupancyGrid):
    ax0, ay0, ax1, ay1 = _bbox(a)
    bx0, by0, bx1, by1 = _bbox(b)
    x0, y0, x1, y1 = max(ax0, bx0), max(ay0, by0), min(ax1, bx1), min(ay1, by1)
    if x0 >= x1 or y0 >= y1:
        return None
    va = a.cells[y0 - ay0:y1 - ay0, x0 - ax0:x1 - ax0]
    vb = b.cells[y0 - by0:y1 - by0, x0 - bx0:x1 - bx0]
    return va, vb


def intersection_known(a: OccupancyGrid, b: OccupancyGrid) -> int:
    """Number of world cells known in both maps."""
    _check_resolutions([a, b])
    views = _overlap_views(a, b)
    if views is None:
        return 0
    va, vb = views
    return int(np.count_nonzero((va != UNKNOWN) & (vb != UNKNOWN)))


def measured_overlap_degree(a: OccupancyGrid, b: OccupancyGrid) -> float:
    denom = known_size_bytes(a) + known_size_bytes(b)
    if denom == 0:
        raise ValueError("overlap degree is undefined for two empty maps")
    return intersection_known(a, b) / denom


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        i, j = self.find(i), self.find(j)
        if i == j:
            return False
        if self.size[i] < self.size[j]:
            i, j = j, i
        self.parent[j] = i
        self.size[i] += self.size[j]
        return True

    def components(self):
        out = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values())


@dataclass
class FusionReport:
    pairwise_checks: int = 0
    overlapping_pairs: list[tuple[int, int]] = field(default_factory=list)
    components: list[list[int]] = field(default_factory=list)
    agreement: dict[tuple[int, int], float] = field(default_factory=dict)


def _pair_check(a: OccupancyGrid, b: OccupancyGrid) -> tuple[int, int]:
    """Shared known cells and how many of them agree."""
    views = _overlap_views(a, b)
    if views is None:
        return 0, 0
    va, vb = views
    both = (va != UNKNOWN) & (vb != UNKNOWN)
    return int(np.count_nonzero(both)), int(np.count_nonzero(both & (va == vb)))


def compose_report(maps: Sequence[OccupancyGrid]) -> tuple[OccupancyGrid, FusionReport]:
    res = _check_resolutions(maps)
    report = FusionReport()
    uf = UnionFind(len(maps))
    for i in range(len(maps)):
        for j in range(i + 1, len(maps)):
            report.pairwise_checks += 1
            shared, agree = _pair_check(maps[i], maps[j])
            if shared:
                report.overlapping_pairs.append((i, j))
                report.agreement[(i, j)] = agree / shared
                uf.union(i, j)
    report.components = uf.components()

    boxes = [_bbox(m) for m in maps]
    x0 = min(b[0] for b in boxes)
    y0 = min(b[1] for b in boxes)
    x1 = max(b[2] for b in boxes)
    y1 = max(b[3] for b in boxes)
    out = np.full((y1 - y0, x1 - x0), UNKNOWN, dtype=np.int8)
    for m, (bx0, by0, bx1, by1) in zip(maps, boxes):
        view = out[by0 - y0:by1 - y0, bx0 - x0:bx1 - x0]
        np.maximum(view, m.cells, out=view)
    return OccupancyGrid(out, res, (x0 * res, y0 * res)), report


def compose(maps: Sequence[OccupancyGrid]) -> OccupancyGrid:
    return compose_report(maps)[0]


# --- synthetic fixtures ------------------------------------------------------


def rect_map(width: int, height: int, offset=(0, 0), resolution=0.05, fill=FREE,
             canvas: tuple[int, int] | None = None) -> OccupancyGrid:
    """A fully known ``width x height`` block whose corner cell sits at lattice ``offset``.

    With ``canvas=(W, H)`` the block is drawn on a larger UNKNOWN grid anchored at the lattice origin.
    """
    if canvas is None:
        cells = np.full((height, width), fill, dtype=np.int8)
        return OccupancyGrid(cells, resolution, (offset[0] * resolution, offset[1] * resolution))
    W, H = canvas
    cells = np.full((H, W), UNKNOWN, dtype=np.int8)
    cells[offset[1]:offset[1] + height, offset[0]:offset[0] + width] = fill
    return OccupancyGrid(cells, resolution, (0.0, 0.0))


def shifted_pair(width: int, height: int, degree: float, resolution=0.05) -> tuple[OccupancyGrid, OccupancyGrid]:
    """Two equal fully-known rectangles shifted along x so their overlap degree is ``degree``.

    The shift is ``width * (1 - 2 * degree)`` cells and must come out integral.
    """
    if not 0.0 <= degree <= 0.5:
        raise ValueError("degree must lie in [0, 0.5]")
    shift = width * (1.0 - 2.0 * degree)
    s = round(shift)
    if abs(shift - s) > 1e-9:
        raise ValueError(f"degree {degree} needs a fractional shift for width {width}")
    a = rect_map(width, height, (0, 0), resolution)
    b = rect_map(width, height, (s, 0), resolution)
    return a, b


def room_map(width: int, height: int, rng=None, resolution=0.05, offset=(0, 0),
             obstacle_density=0.03) -> OccupancyGrid:
    """Walled rectangular room with scattered obstacles, every cell known."""
    rng = np.random.default_rng(rng)
    cells = np.full((height, width), FREE, dtype=np.int8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    cells[rng.random((height, width)) < obstacle_density] = OCCUPIED
    return OccupancyGrid(cells, resolution, (offset[0] * resolution, offset[1] * resolution))


def fusion_fixture(k: int, rng=None, size: int = 192, jitter: int = 24, resolution=0.05) -> list[OccupancyGrid]:
    """``k`` room maps jittered around a common spot, so every pair overlaps."""
    rng = np.random.default_rng(rng)
    maps = []
    for _ in range(k):
        off = tuple(int(x) for x in rng.integers(0, jitter + 1, size=2))
        m = room_map(size, size, rng, resolution, off)
        # carve an unknown corner so maps are not uniformly known
        cells = m.cells.copy()
        cells[: size // 4, : size // 4] = UNKNOWN
        maps.append(OccupancyGrid(cells, resolution, m.origin))
    return maps


# --- profiling -----------------------------------------------------------------


@dataclass
class FusionProfile:
    ks: np.ndarray
    times: np.ndarray
    model: FusionLatencyModel
    r2: float
    checks: dict[int, int]


def fit_fusion_model(ks, times) -> tuple[FusionLatencyModel, float]:
    """Least-squares quadratic fit of fusion time against map count, with its R^2."""
    ks = np.asarray(ks, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(np.unique(ks)) < 3:
        raise ValueError("a quadratic fit needs samples at >= 3 distinct map counts")
    alpha, beta, gamma = np.polyfit(ks, times, 2)
    pred = np.polyval([alpha, beta, gamma], ks)
    ss_res = float(np.sum((times - pred) ** 2))
    ss_tot = float(np.sum((times - times.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    alpha = max(float(alpha), 0.0)
    # clamp tiny negative intercepts from noise so the model stays a valid latency
    model_min = min(alpha * k * k + beta * k + gamma for k in range(1, int(ks.max()) + 1))
    if model_min < 0:
        gamma -= model_min
    return FusionLatencyModel(alpha, float(beta), float(gamma)), r2


def profile_fusion(k_range: Sequence[int], generator: Callable[[int, np.random.Generator], list] = fusion_fixture,
                   repetitions: int = 5, rng=0) -> FusionProfile:
    """Time ``compose`` over synthetic map sets and fit the quadratic latency model.

    Each ``k`` keeps the fastest of ``repetitions`` runs on one fixture.
    Repetitions sweep all counts in turn, so a slow spell on the machine
    spreads across counts instead of inflating one of them. The garbage
    collector is paused while timing, as ``timeit`` does.
    """
    ks = sorted(set(int(k) for k in k_range))
    if any(k < 2 for k in ks):
        raise ValueError("profiling needs k >= 2 maps per sample")
    if len(ks) < 3:
        raise ValueError("profiling needs at least three distinct map counts")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    rng = np.random.default_rng(rng)
    fixtures = {k: generator(k, rng) for k in ks}
    best = {k: np.inf for k in ks}
    checks = {}
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for k in ks:
            compose_report(fixtures[k])  # warm-up
        for _ in range(repetitions):
            for k in ks:
                t0 = time.perf_counter()
                _, report = compose_report(fixtures[k])
                best[k] = min(best[k], time.perf_counter() - t0)
                checks[k] = report.pairwise_checks
    finally:
        if gc_was_enabled:
            gc.enable()
    times = [best[k] for k in ks]
    model, r2 = fit_fusion_model(ks, times)
    return FusionProfile(np.array(ks), np.array(times), model, r2, checks)


# --- PGM + sidecar I/O ---------------------------------------------------------


def encode_pgm(m: OccupancyGrid) -> bytes:
    img = np.full(m.cells.shape, PGM_UNKNOWN, dtype=np.uint8)
    img[m.cells == FREE] = PGM_FREE
    img[m.cells == OCCUPIED] = PGM_OCCUPIED
    header = f"P5\n{m.width} {m.height}\n255\n".encode("ascii")
    return header + img[::-1].tobytes()


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte precedes the raster


def decode_pgm(data: bytes, resolution: float, origin=(0.0, 0.0)) -> OccupancyGrid:
    tokens, pos = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise ValueError("not a binary (P5) PGM")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValueError("malformed PGM header") from None
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ValueError("truncated PGM raster")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)[::-1]
    cells = np.full(img.shape, UNKNOWN, dtype=np.int8)
    cells[img == PGM_OCCUPIED] = OCCUPIED
    cells[(img == PGM_FREE) | (img == 255)] = FREE
    bad = ~np.isin(img, (PGM_OCCUPIED, PGM_FREE, 255, PGM_UNKNOWN))
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise ValueError(f"pixel value {img[y, x]} is not an occupancy code (0, 205, 254, 255)")
    return OccupancyGrid(cells, resolution, origin)


def _atomic_write(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def sidecar_path(pgm_path) -> Path:
    return Path(pgm_path).with_suffix(".yaml")


def write_map(path, m: OccupancyGrid):
    """Write ``path`` (PGM) plus a ``.yaml`` sidecar carrying resolution and origin."""
    path = Path(path)
    meta = {
        "image": path.name,
        "resolution": m.resolution,
        "origin": [m.origin[0], m.origin[1], 0.0],
        "negate": 0,
        "occupied_thresh": 0.65,
        "free_thresh": 0.196,
    }
    _atomic_write(path, encode_pgm(m))
    _atomic_write(sidecar_path(path), yaml.safe_dump(meta, sort_keys=False).encode())


def read_map(path) -> OccupancyGrid:
    path = Path(path)
    meta_path = sidecar_path(path)
    if not meta_path.is_file():
        raise ValueError(f"{path}: missing metadata sidecar {meta_path.name}")
    meta = yaml.safe_load(meta_path.read_text()) or {}
    try:
        resolution = float(meta["resolution"])
        origin = (float(meta["origin"][0]), float(meta["origin"][1]))
    except (KeyError, TypeError, IndexError, ValueError):
        raise ValueError(f"{meta_path}: needs 'resolution' and 'origin: [x, y, yaw]'") from None
    try:
        return decode_pgm(path.read_bytes(), resolution, origin)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
