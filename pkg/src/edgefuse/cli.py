"""Command-line entry point: ``edgefuse schedule|sweep|mapmerge|profile``.

Exit codes: 0 success, 2 invalid input (scenario, flags, map files), 3 internal
consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, costmodel, gridmap
from .pipeline import CSV_FIELDS, POLICIES, attach_oracle, run_policy
from .scene import ScenarioError, load_scenario, matrix_scene, random_overlap_matrix
from .tabu import TabuConfig

EXIT_INPUT = 2
EXIT_INTERNAL = 3


class InputError(Exception):
    pass


def _policies(text: str) -> list[str]:
    names = [p.strip() for p in text.split(",") if p.strip()]
    if not names:
        raise InputError("--policy: at least one policy is required")
    for p in names:
        if p not in POLICIES:
            raise InputError(f"--policy: unknown policy {p!r} (choose from {', '.join(POLICIES)})")
    return list(dict.fromkeys(names))


def _seeds(text: str) -> list[int]:
    """``N`` means seeds 0..N-1; a comma list names seeds explicitly."""
    try:
        if "," in text:
            seeds = [int(s) for s in text.split(",") if s.strip()]
        else:
            seeds = list(range(int(text)))
    except ValueError:
        raise InputError(f"--seeds: expected a count or a comma list, got {text!r}") from None
    if not seeds:
        raise InputError("--seeds: at least one seed is required")
    return seeds


def _counts(text: str) -> list[int]:
    try:
        counts = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"--robots: expected comma-separated integers, got {text!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise InputError("--robots: counts must be positive integers")
    return counts


def _weight_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise InputError(f"--weight-range: expected 'lo,hi', got {text!r}") from None
    if not 0.0 <= lo < hi <= 0.5:
        raise InputError("--weight-range: need 0 <= lo < hi <= 0.5")
    return lo, hi


def _tabu(args) -> TabuConfig | None:
    if args.no_tabu:
        return None
    try:
        return TabuConfig(args.tabu_iters, args.tabu_capacity)
    except ValueError as exc:
        raise InputError(f"tabu: {exc}") from None


def _atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(rows: list[dict], timestamp: bool) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# edgefuse {__version__} generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _check_consistency(result, scene, p, m):
    if result.grouping is None:
        return
    again = costmodel.total_latency(result.grouping.groups(), result.assignment, scene, p, m).total
    assert math.isclose(again, result.total_latency, rel_tol=1e-12), (
        f"{result.policy} seed {result.seed}: reported {result.total_latency}, recomputed {again}")


def _run_cell(task, scene, params, model, tabu, greedy_passes, oracle):
    policy, seed = task
    result = run_policy(policy, scene, params, model, seed, tabu, greedy_passes)
    if oracle:
        attach_oracle(result, scene, params, model)
    return result


def _run_tasks(tasks, scene, params, model, tabu, greedy_passes, oracle, jobs):
    fn = partial(_run_cell, scene=scene, params=params, model=model, tabu=tabu,
                 greedy_passes=greedy_passes, oracle=oracle)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, tasks))
    else:
        results = [fn(t) for t in tasks]
    for r in results:
        _check_consistency(r, scene, params, model)
    return results


def _tasks(policies, seeds):
    tasks = []
    for policy in policies:
        if policy == "cloud":
            tasks.append((policy, None))
        else:
            tasks.extend((policy, s) for s in seeds)
    return tasks


def _sort_key(r):
    return (r.n_robots, r.policy, -1 if r.seed is None else r.seed)


def _summarize(results, out=None):
    out = out or sys.stdout
    by_policy = {}
    for r in results:
        by_policy.setdefault((r.n_robots, r.policy), []).append(r.total_latency)
    for (n, policy), vals in sorted(by_policy.items()):
        print(f"{policy:8s} robots={n:<3d} runs={len(vals):<4d} mean={np.mean(vals):.4f}s "
              f"min={np.min(vals):.4f}s max={np.max(vals):.4f}s", file=out)


def _write_outputs(out_dir: Path, name: str, results, timestamp: bool, want_json: bool):
    rows = [r.csv_row(timing=timestamp) for r in results]
    files = {out_dir / f"{name}.csv": _csv_text(rows, timestamp)}
    if want_json:
        for r in results:
            tag = "x" if r.seed is None else r.seed
            doc = r.to_dict(timing=timestamp)
            doc["robots"] = r.n_robots
            files[out_dir / "reports" / f"{name}-R{r.n_robots}-{r.policy}-{tag}.json"] = (
                json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for path, text in files.items():
        _atomic_write_text(path, text)
    return out_dir / f"{name}.csv"


def cmd_schedule(args) -> int:
    policies = _policies(args.policy)
    seeds = _seeds(args.seeds)
    tabu = _tabu(args)
    scenario = load_scenario(args.scenario, args.profile)
    scene = scenario.scene
    results = _run_tasks(_tasks(policies, seeds), scene, scenario.params, scenario.fusion_model,
                         tabu, args.greedy_passes, args.oracle, args.jobs)
    results.sort(key=_sort_key)
    path = _write_outputs(Path(args.out), "schedule", results, not args.no_timestamp, args.json)
    _summarize(results)
    if args.oracle:
        gaps = [r.oracle_gap for r in results if r.oracle_gap is not None]
        if gaps:
            print(f"oracle   mean_gap={np.mean(gaps):.6f}s max_gap={np.max(gaps):.6f}s")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    policies = _policies(args.policy)
    seeds = _seeds(args.seeds)
    counts = _counts(args.robots)
    weights = _weight_range(args.weight_range)
    if not 0.0 <= args.density <= 1.0:
        raise InputError("--density: must lie in [0, 1]")
    tabu = _tabu(args)
    template = load_scenario(args.template, args.profile)
    map_bytes = float(template.scene.map_sizes.mean())
    results = []
    for n in counts:
        for seed in seeds:
            rng = np.random.default_rng([n, seed])
            w = random_overlap_matrix(n, args.density, weights, rng)
            scene = matrix_scene(template.scene, n, w, map_bytes)
            cell_policies = [p for p in policies if p != "cloud" or seed == seeds[0]]
            tasks = [(p, None if p == "cloud" else seed) for p in cell_policies]
            results += _run_tasks(tasks, scene, template.params, template.fusion_model,
                                  tabu, args.greedy_passes, args.oracle, args.jobs)
    results.sort(key=_sort_key)
    path = _write_outputs(Path(args.out), "sweep", results, not args.no_timestamp, args.json)
    _summarize(results)
    print(f"wrote {path}")
    return 0


def cmd_mapmerge(args) -> int:
    try:
        maps = [gridmap.read_map(p) for p in args.maps]
        merged, report = gridmap.compose_report(maps)
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from None
    for path, m in zip(args.maps, maps):
        print(f"{path}: {m.width}x{m.height} known={gridmap.known_size_bytes(m)}")
    for i in range(len(maps)):
        for j in range(i + 1, len(maps)):
            d = gridmap.measured_overlap_degree(maps[i], maps[j])
            print(f"overlap[{i},{j}] = {d:.6f}")
    print(f"pairwise_checks={report.pairwise_checks} components={report.components}")
    out = Path(args.output)
    gridmap.write_map(out, merged)
    print(f"merged: {merged.width}x{merged.height} known={gridmap.known_size_bytes(merged)} "
          f"file_bytes={out.stat().st_size} -> {out}")
    return 0


def cmd_profile(args) -> int:
    ks = list(range(args.k_min, args.k_max + 1))
    try:
        prof = gridmap.profile_fusion(ks, repetitions=args.reps, rng=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for k, t in zip(prof.ks, prof.times):
        print(f"k={k:<3d} checks={prof.checks[k]:<4d} time={t * 1e3:.3f}ms")
    m = prof.model
    print(f"fit: alpha={m.alpha:.6g} beta={m.beta:.6g} gamma={m.gamma:.6g} R2={prof.r2:.4f}")
    return 0


def _add_schedule_flags(p):
    p.add_argument("--policy", default="recslam,greedy,random,cloud",
                   help="comma list of policies (recslam, greedy, random, cloud)")
    p.add_argument("--seeds", default="10", help="seed count N (0..N-1) or comma list")
    p.add_argument("--profile", default=None, help="cost profile preset name or JSON path")
    p.add_argument("--tabu-iters", type=int, default=100)
    p.add_argument("--tabu-capacity", type=int, default=10)
    p.add_argument("--no-tabu", action="store_true", help="skip tabu refinement of the grouping")
    p.add_argument("--greedy-passes", type=int, default=1)
    p.add_argument("--oracle", action="store_true", help="report the gap to the best server assignment")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true", help="also write one JSON report per run")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp line and wall-clock columns so reruns are byte-identical")
    p.add_argument("-o", "--out", default="results", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgefuse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"edgefuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="run scheduling policies on one scenario")
    p.add_argument("scenario")
    _add_schedule_flags(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("sweep", help="random-matrix experiments over robot counts")
    p.add_argument("template", help="scenario supplying servers, cloud and map sizes")
    p.add_argument("--robots", required=True, help="comma list of robot counts")
    p.add_argument("--density", type=float, default=0.3, help="link probability")
    p.add_argument("--weight-range", default="0,0.5", help="overlap degrees drawn from (lo, hi]")
    _add_schedule_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mapmerge", help="fuse pose-aligned PGM maps")
    p.add_argument("maps", nargs="+")
    p.add_argument("-o", "--output", required=True, help="merged PGM path (sidecar .yaml written alongside)")
    p.set_defaults(func=cmd_mapmerge)

    p = sub.add_parser("profile", help="time synthetic fusion and fit the quadratic latency model")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
