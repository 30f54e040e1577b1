import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgefuse.costmodel import load_profile
from edgefuse.scene import (
    EdgeServerSpec,
    RobotSpec,
    ScenarioError,
    Scene,
    build_overlap_matrix,
    coverage_region,
    load_scenario,
    overlap_degree,
    random_overlap_matrix,
    scenario_from_dict,
)

RES = 0.05
CLOUD = load_profile("wifi").cloud_fusion
EDGE = EdgeServerSpec(0, 1.0, 1e6, 1e4)


def robot(rid, route, radius=1.0):
    return RobotSpec(rid, tuple(map(tuple, route)), radius, 3300)


def area(cells, res=RES):
    return len(cells) * res * res


def lens_degree(d, r=1.0):
    lens = 2 * r * r * math.acos(d / (2 * r)) - (d / 2) * math.sqrt(4 * r * r - d * d)
    return lens / (2 * math.pi * r * r)


def test_disc_area_matches_closed_form():
    cells = coverage_region(robot(0, [(0.0, 0.0)]), RES)
    assert area(cells) == pytest.approx(math.pi, rel=0.02)


def test_stadium_area_matches_closed_form():
    cells = coverage_region(robot(0, [(0.0, 0.0), (2.0, 0.0)]), RES)
    assert area(cells) == pytest.approx(math.pi + 2 * 2 * 1, rel=0.02)


def test_coverage_is_deterministic():
    a = coverage_region(robot(0, [(1.0, 2.0), (3.0, 2.5)]), RES)
    b = coverage_region(robot(1, [(1.0, 2.0), (3.0, 2.5)]), RES)
    assert a == b


def test_zero_radius_rejected():
    with pytest.raises(ValueError):
        RobotSpec(0, ((0.0, 0.0),), 0.0, 3300)
    with pytest.raises(ValueError):
        coverage_region(robot(0, [(0, 0)]), 0.0)


def test_overlap_degree_basic_cases():
    a = coverage_region(robot(0, [(0.0, 0.0)]), RES)
    far = coverage_region(robot(1, [(10.0, 0.0)]), RES)
    assert overlap_degree(a, far) == 0.0
    assert overlap_degree(a, a) == 0.5
    with pytest.raises(ValueError):
        overlap_degree(a, frozenset())


def test_unit_discs_one_meter_apart_match_lens_formula():
    a = coverage_region(robot(0, [(0.0, 0.0)]), RES)
    b = coverage_region(robot(1, [(1.0, 0.0)]), RES)
    assert lens_degree(1.0) == pytest.approx(0.1955, abs=1e-4)
    assert overlap_degree(a, b) == pytest.approx(lens_degree(1.0), abs=0.01)


@pytest.mark.parametrize("d", [0.3, 0.8, 1.4])
def test_resolution_halving_changes_degree_little(d):
    degrees = []
    for res in (0.05, 0.025):
        a = coverage_region(robot(0, [(0.0, 0.0), (0.5, 0.0)]), res)
        b = coverage_region(robot(1, [(d, 0.3), (d + 0.5, 0.3)]), res)
        degrees.append(overlap_degree(a, b))
    assert abs(degrees[0] - degrees[1]) < 0.02 * degrees[1]


def test_matrix_for_single_robot_is_zero():
    s = Scene((robot(0, [(0, 0)]),), (EDGE,), CLOUD, RES)
    assert s.overlap_matrix.shape == (1, 1)
    assert s.overlap_matrix[0, 0] == 0


def test_disjoint_robots_give_zero_matrix():
    robots = tuple(robot(i, [(5.0 * i, 0.0)]) for i in range(4))
    w = build_overlap_matrix(Scene(robots, (EDGE,), CLOUD, RES))
    assert not w.any()


def test_collinear_robots_overlap_only_with_neighbors():
    robots = tuple(robot(i, [(1.5 * i, 0.0)]) for i in range(3))
    s = Scene(robots, (EDGE,), CLOUD, RES)
    w = s.overlap_matrix
    cov = s.coverages
    # rasterized intersection oracle
    assert w[0, 2] == 0 and not (cov[0] & cov[2])
    assert w[0, 1] == len(cov[0] & cov[1]) / (len(cov[0]) + len(cov[1])) > 0
    assert w[1, 2] > 0
    assert np.array_equal(w, w.T) and not np.diag(w).any()


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=3),
    st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=3),
    st.floats(0.3, 1.5),
)
def test_overlap_degree_symmetric_and_bounded(ra, rb, radius):
    a = coverage_region(robot(0, ra, radius), 0.1)
    b = coverage_region(robot(1, rb, radius), 0.1)
    d = overlap_degree(a, b)
    assert d == overlap_degree(b, a)
    assert 0.0 <= d <= 0.5
    assert overlap_degree(a, a) == 0.5


def test_random_matrix_is_valid(rng):
    w = random_overlap_matrix(20, 0.3, (0.0, 0.5), rng)
    assert np.array_equal(w, w.T)
    assert not np.diag(w).any()
    assert w.max() <= 0.5 and w.min() >= 0
    nz = w[np.triu_indices(20, 1)]
    assert 0.15 < np.mean(nz > 0) < 0.45


def test_load_apartment(apartment_path):
    sc = load_scenario(apartment_path)
    assert len(sc.scene.robots) == 10 and len(sc.scene.edges) == 3
    assert sc.profile == "wifi"
    assert sc.scene.overlap_matrix.shape == (10, 10)


def _doc():
    return {
        "robots": [{"id": 0, "raw_frame_bytes": 100, "map_bytes": 500},
                   {"id": 1, "raw_frame_bytes": 100, "map_bytes": 400}],
        "edges": [{"id": 0, "uplink_bw_robot": 1e6, "uplink_bw_cloud": 1e4}],
        "overlap_matrix": [[0, 0.2], [0.2, 0]],
    }


def test_matrix_scenario_bypasses_geometry():
    sc = scenario_from_dict(_doc())
    assert sc.scene.overlap_matrix[0, 1] == 0.2
    assert list(sc.scene.map_sizes) == [500, 400]


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["overlap_matrix"].__setitem__(0, [0, 0.3]), "symmetric"),
    (lambda d: d["robots"][1].__setitem__("raw_frame_bytes", -1), "robots[1].raw_frame_bytes"),
    (lambda d: d["edges"][0].pop("uplink_bw_cloud"), "edges[0]"),
    (lambda d: d.__setitem__("overlap_matrix", [[0, 0.7], [0.7, 0]]), "[0, 0.5]"),
    (lambda d: d.__setitem__("cost_params", "no-such-profile"), "cost_params"),
])
def test_validation_names_the_field(mutate, field):
    doc = _doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=field.replace("[", r"\[").replace("]", r"\]")):
        scenario_from_dict(doc)


def test_invalid_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"robots": [\n  {"id": 0,,}\n]}')
    with pytest.raises(ScenarioError, match="line 2"):
        load_scenario(p)


def test_inline_cost_params(tmp_path):
    doc = _doc()
    doc["cost_params"] = {"t_pack": 0.5, "edge_fusion": {"alpha": 0.1, "beta": 0, "gamma": 0}}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    sc = load_scenario(p)
    assert sc.params.t_pack == 0.5
    assert sc.fusion_model.alpha == 0.1
    assert sc.scene.cloud_fusion_model.alpha == pytest.approx(0.025)
