"""End-to-end latency of the four scheduling policies.

recslam groups by overlap, refines with tabu search and places groups greedily.
greedy starts from a random grouping and makes one pass of overlap-seeking swaps.
random groups and places at random. cloud skips the edge tier entirely.
"""
from pathlib import Path

import numpy as np

from edgefuse import load_scenario
from edgefuse.pipeline import POLICIES, run_policy
from edgefuse.scene import matrix_scene, random_overlap_matrix

sc = load_scenario(Path(__file__).resolve().parents[1] / "fixtures" / "apartment.json")

print("apartment, 100 seeds:")
means = {}
for policy in POLICIES:
    seeds = [None] if policy == "cloud" else range(100)
    runs = [run_policy(policy, sc.scene, sc.params, sc.fusion_model, s) for s in seeds]
    means[policy] = np.mean([r.total_latency for r in runs])
    print(f"  {policy:8s} mean {means[policy]:.3f} s")
print(f"  recslam saves {1 - means['recslam'] / means['random']:.0%} over random")

print("random sparse scenes, scheduler wall time:")
rng = np.random.default_rng(0)
for n in (10, 30, 50):
    scene = matrix_scene(sc.scene, n, random_overlap_matrix(n, 0.3, (0.0, 0.5), rng))
    r = run_policy("recslam", scene, sc.params, sc.fusion_model)
    print(f"  {n} robots: {r.sched_wall_s * 1e3:.1f} ms, total latency {r.total_latency:.2f} s")
