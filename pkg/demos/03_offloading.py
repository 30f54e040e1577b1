"""Placing groups on heterogeneous edge servers, and how far greedy is from optimal.

Groups take the cheapest free server in index order. The oracle enumerates
every injective placement and minimizes the end-to-end latency instead, so
the difference is the price of the greedy order.
"""
from pathlib import Path

from edgefuse import load_scenario
from edgefuse.pipeline import attach_oracle, path_cost_matrix, run_recslam

sc = load_scenario(Path(__file__).resolve().parents[1] / "fixtures" / "apartment.json")
result = run_recslam(sc.scene, sc.params, sc.fusion_model)
groups = result.grouping.groups()

print("fuse-and-upload time per group (rows) on each server (columns):")
for g, row in zip(groups, path_cost_matrix(groups, sc.scene, sc.params, sc.fusion_model)):
    print(f"  {str(g):16s} " + "  ".join(f"{c:6.3f}" for c in row))

attach_oracle(result, sc.scene, sc.params, sc.fusion_model)
b = result.breakdown
print(f"greedy servers {result.assignment}")
for g, sid, te, tu, size in zip(groups, b.server_ids, b.edge_times, b.upload_times, b.output_sizes):
    print(f"  group {g} on server {sid}: edge {te:.3f} s + upload {tu:.3f} s ({size:.0f} bytes)")
print(f"cloud fusion {b.cloud_fusion:.3f} s, total {result.total_latency:.4f} s")
print(f"oracle total {result.oracle_latency:.4f} s, gap {result.oracle_gap:.4f} s")
