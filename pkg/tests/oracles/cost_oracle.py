"""Recompute end-to-end latencies for the apartment fixture by hand.

Reads the resolved scenario (explicit overlap matrix and map sizes) and the
bundled profile table as plain JSON, then evaluates the latency formulas with
nothing but arithmetic. Run as a script to rewrite ``apartment_oracle.json``.
"""
import json
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
DATA = HERE.parent / "data"
PROFILES = HERE.parents[1] / "src" / "edgefuse" / "data" / "profiles.json"

CASES = [
    {"groups": [[1, 4, 7, 9], [0, 3, 6], [2, 5, 8]], "servers": [2, 0, 1]},
    {"groups": [[0, 1, 2, 9], [3, 4, 5], [6, 7, 8]], "servers": [0, 1, 2]},
    {"groups": [[0, 5, 7], [2, 3, 9, 1], [4, 6, 8]], "servers": [1, 2, 0]},
]


def preset(name):
    table = json.loads(PROFILES.read_text())["presets"]
    return table[name]


def case_total(scenario, groups, servers):
    prof = preset(scenario["cost_params"])
    edge = prof["edge_fusion"]
    cloud_scale = prof["cloud_compute_scale"]
    robots = scenario["robots"]
    w = scenario["overlap_matrix"]
    edges = {e["id"]: e for e in scenario["edges"]}

    paths = []
    for group, sid in zip(groups, servers):
        e = edges[sid]
        link = min(prof["robot_uplink_bw"], e["uplink_bw_robot"])
        ready = 0.0
        for i in group:
            t = prof["t_pack"] + robots[i]["raw_frame_bytes"] / link + prof["t_frame"]
            ready = max(ready, t)
        k = len(group)
        fuse = e["compute_scale"] * (edge["alpha"] * k * k + edge["beta"] * k + edge["gamma"])
        sizes = [robots[i]["map_bytes"] for i in group]
        merged = sum(sizes)
        for a in range(k):
            for b in range(a + 1, k):
                i, j = group[a], group[b]
                merged -= w[i][j] * (robots[i]["map_bytes"] + robots[j]["map_bytes"])
        merged = min(max(merged, max(sizes)), sum(sizes))
        paths.append(ready + fuse + merged / e["uplink_bw_cloud"])
    n = len(groups)
    cloud = cloud_scale * (edge["alpha"] * n * n + edge["beta"] * n + edge["gamma"])
    return max(paths) + cloud


def compute(scenario_path=DATA / "apartment_resolved.json"):
    scenario = json.loads(Path(scenario_path).read_text())
    return [dict(case, total_latency_s=case_total(scenario, case["groups"], case["servers"])) for case in CASES]


if __name__ == "__main__":
    out = DATA / "apartment_oracle.json"
    out.write_text(json.dumps(compute(), indent=2) + "\n")
    sys.stdout.write(f"wrote {out}\n")
