"""Composing pose-aligned occupancy grids and profiling the fusion cost.

Overlap shrinks the merged map: two equal maps at degree 0.5 merge into one
map's worth of cells. Fusion time grows with the square of the map count
because every pair is checked for overlap.
"""
import tempfile
from pathlib import Path

from edgefuse import gridmap

print("degree  merged known cells")
for step in range(0, 11, 2):
    a, b = gridmap.shifted_pair(40, 25, step / 20)
    merged = gridmap.compose([a, b])
    print(f"{gridmap.measured_overlap_degree(a, b):6.2f}  {gridmap.known_size_bytes(merged):5d}")

rooms = gridmap.fusion_fixture(4, rng=1, size=96, jitter=20)
merged, report = gridmap.compose_report(rooms)
print(f"4 rooms: {report.pairwise_checks} pairwise checks, components {report.components}, "
      f"merged {merged.width}x{merged.height} with {gridmap.known_size_bytes(merged)} known cells")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "merged.pgm"
    gridmap.write_map(path, merged)
    again = gridmap.read_map(path)
    print(f"PGM round trip: {path.stat().st_size} bytes, identical={again.content_equal(merged)}")

prof = gridmap.profile_fusion(range(2, 11), repetitions=3)
m = prof.model
print(f"fitted fusion time: {m.alpha:.2e} k^2 + {m.beta:.2e} k + {m.gamma:.2e} s (R^2 {prof.r2:.3f})")
