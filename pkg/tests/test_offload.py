import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgefuse.offload import ORACLE_MAX_SERVERS, assign, offload_cost, oracle_optimal_assignment
from edgefuse.scene import EdgeServerSpec


def servers(n, bw_cloud=1.0):
    return [EdgeServerSpec(j, 1.0, 1e6, bw_cloud) for j in range(n)]


def table(costs):
    """Latency lookup keyed on (group label, server id); groups are 1-tuples of a label."""
    costs = np.asarray(costs, dtype=float)
    return (lambda group, s: costs[group[0], s.id]), (lambda group: 0.0)


def makespan(costs, theta):
    return max(costs[i][s] for i, s in enumerate(theta))


def test_single_group_single_server():
    lat, size = table([[2.0]])
    assert assign([(0,)], servers(1), lat, size) == [0]


def test_cheaper_server_goes_first():
    # A computes fast but uploads slowly, B the opposite
    a = EdgeServerSpec(0, 0.5, 1e6, 10.0)
    b = EdgeServerSpec(1, 2.0, 1e6, 20.0)
    lat = lambda group, s: {0: 2.0, 1: 4.0}[s.id]
    size = lambda group: 20.0
    assert [offload_cost((0,), s, lat, size) for s in (a, b)] == [4.0, 5.0]
    assert assign([(0,), (1,)], [a, b], lat, size) == [0, 1]
    assert assign([(0,), (1,)], [b, a], lat, size) == [0, 1]


def test_identical_servers_follow_index_order():
    lat, size = table(np.ones((4, 5)))
    assert assign([(i,) for i in range(4)], servers(5), lat, size) == [0, 1, 2, 3]


def test_too_many_groups():
    lat, size = table(np.ones((3, 2)))
    with pytest.raises(ValueError):
        assign([(0,), (1,), (2,)], servers(2), lat, size)


def test_oracle_beats_greedy_on_adversarial_instance():
    costs = [[1, 2, 3], [1.5, 2, 3], [1, 10, 10]]
    lat, size = table(costs)
    groups = [(0,), (1,), (2,)]
    theta = assign(groups, servers(3), lat, size)
    assert theta == [0, 1, 2] and makespan(costs, theta) == 10
    best, value = oracle_optimal_assignment(groups, servers(3), lambda t: makespan(costs, t))
    assert best == [1, 2, 0] and value == 3
    assert makespan(costs, theta) - value == 7


def test_oracle_single_group_and_budget():
    costs = [[3.0, 1.0, 2.0]]
    best, value = oracle_optimal_assignment([(0,)], servers(3), lambda t: makespan(costs, t))
    assert best == [1] and value == 1.0
    with pytest.raises(ValueError, match="reduce"):
        oracle_optimal_assignment([(0,)], servers(ORACLE_MAX_SERVERS + 1), lambda t: 0.0)


def test_oracle_lexicographic_tie_break():
    best, _ = oracle_optimal_assignment([(0,), (1,)], servers(3), lambda t: 1.0)
    assert best == [0, 1]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_greedy_properties(n_groups, extra, seed):
    rng = np.random.default_rng(seed)
    n_servers = n_groups + extra
    costs = rng.uniform(0.1, 5.0, (n_groups, n_servers))
    lat, size = table(costs)
    pool = servers(n_servers)
    groups = [(i,) for i in range(n_groups)]
    theta = assign(groups, pool, lat, size)
    assert len(set(theta)) == len(theta) == n_groups
    left = list(range(n_servers))
    for i, s in enumerate(theta):
        assert costs[i, s] == min(costs[i, j] for j in left)
        left.remove(s)
    brute = min(makespan(costs, t) for t in itertools.permutations(range(n_servers), n_groups))
    _, value = oracle_optimal_assignment(groups, pool, lambda t: makespan(costs, t))
    assert value == brute <= makespan(costs, theta)
