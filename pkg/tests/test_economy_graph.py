import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from econosim.economy_graph import (
    BY_IN,
    BY_OUT,
    EconomyNetwork,
    SelfLoopError,
    add_edge,
    degree_histogram,
    from_edges,
    init_network,
    read_edges_csv,
    remove_incoming,
    sample_preferential,
    write_edges_csv,
)
from econosim.tail_stats import fit_degree_exponent


def recount(net):
    k_in = Counter(c for _, c in net.edges())
    k_out = Counter(p for p, _ in net.edges())
    return (
        [k_in.get(i, 0) for i in range(net.n_agents)],
        [k_out.get(i, 0) for i in range(net.n_agents)],
    )


def test_init_delta_out_degree():
    net = init_network(1000, 1, 42)
    assert net.n_edges == 1000
    assert set(net.k_out) == {1}
    assert degree_histogram(net, BY_OUT) == {1: 1000}


def test_init_saturated_small_network():
    net = init_network(10, 9, 7)
    assert net.n_edges == 90
    assert all(p != c for p, c in net.edges())


@pytest.mark.parametrize("n,k0", [(9, 1), (10, 10), (10, 0), (50, 60)])
def test_init_rejects_bad_parameters(n, k0):
    with pytest.raises(ValueError):
        init_network(n, k0, 0)


def test_init_in_degree_is_heavy_tailed():
    net = init_network(10_000, 1, 3)
    gamma = fit_degree_exponent(net.degree_histogram(BY_IN))
    assert 2.0 <= gamma <= 3.5


def test_add_edge_counts_and_parallel_edges():
    net = EconomyNetwork(2)
    add_edge(net, 0, 1)
    assert net.k_out == [1, 0] and net.k_in == [0, 1]
    add_edge(net, 0, 1)
    assert net.k_out == [2, 0] and net.k_in == [0, 2]
    assert net.edges() == [(0, 1), (0, 1)]


def test_self_loop_rejected():
    net = EconomyNetwork(3)
    with pytest.raises(SelfLoopError):
        net.add_edge(0, 0)
    assert net.n_edges == 0


def test_remove_incoming_keeps_newest():
    net = EconomyNetwork(6)
    for p in range(1, 6):
        net.add_edge(p, 0)
    removed = remove_incoming(net, 0, keep=1)
    assert sorted(removed) == [(1, 0), (2, 0), (3, 0), (4, 0)]
    assert net.k_in[0] == 1
    assert net.producers_of(0) == [5]
    assert net.k_out == [0, 0, 0, 0, 0, 1]


def test_remove_incoming_noop_when_k_in_small():
    net = from_edges(3, [(1, 0), (0, 2)])
    assert remove_incoming(net, 0, keep=1) == []
    assert remove_incoming(net, 2, keep=5) == []
    assert net.n_edges == 2


def test_remove_incoming_decrements_producers_by_multiplicity():
    net = from_edges(4, [(1, 0), (1, 0), (2, 0), (1, 0), (3, 0), (0, 3)])
    remove_incoming(net, 0, keep=1)
    assert (net.k_in, net.k_out) == tuple(recount(net))
    assert net.k_out[1] == 0 and net.k_out[2] == 0 and net.k_out[3] == 1


def test_two_agent_smoothed_weights():
    net = from_edges(2, [(1, 0)] * 3)
    w = net.preferential_weights(BY_IN)
    assert w.tolist() == pytest.approx([0.8, 0.2])


def test_uniform_when_degrees_equal():
    net = init_network(20, 2, 0)
    w = net.preferential_weights(BY_OUT)
    assert np.allclose(w, 1 / 20)


def test_sampling_matches_smoothed_weights():
    """10^6 draws against exact weights: chi-square and max deviation."""
    net = init_network(1000, 1, 11)
    rng = random.Random(5)
    n_draws = 10**6
    counts = np.bincount([sample_preferential(net, BY_IN, rng) for _ in range(n_draws)],
                         minlength=net.n_agents)
    w = net.preferential_weights(BY_IN)
    assert np.max(np.abs(counts / n_draws - w)) < 3e-3
    # pool sparse cells so every expected count is at least 5
    order = np.argsort(w)
    exp, obs = w[order] * n_draws, counts[order]
    groups = np.cumsum(exp) // 50
    e = np.bincount(groups.astype(int), weights=exp)
    o = np.bincount(groups.astype(int), weights=obs)
    keep = e > 0
    chi2 = np.sum((o[keep] - e[keep]) ** 2 / e[keep])
    p = stats.chi2.sf(chi2, keep.sum() - 1)
    assert p > 0.001


def test_sample_excluding_never_returns_excluded():
    net = init_network(15, 1, 1)
    rng = random.Random(0)
    assert all(net.sample_excluding(BY_IN, rng, 4) != 4 for _ in range(2000))


def test_determinism():
    a, b = init_network(200, 2, 99), init_network(200, 2, 99)
    assert a.edges() == b.edges()


def test_histogram_sums():
    net = init_network(300, 2, 4)
    h = degree_histogram(net, BY_IN)
    assert sum(h.values()) == 300
    assert sum(k * c for k, c in h.items()) == net.n_edges


def test_csv_round_trip(tmp_path):
    net = init_network(50, 2, 8)
    path = tmp_path / "edges.csv"
    write_edges_csv(net, path)
    assert path.read_text().splitlines()[0] == "producer,consumer"
    back = read_edges_csv(path, 50)
    assert back.edges() == net.edges()


ops = st.lists(
    st.tuples(st.sampled_from(["add", "strip"]), st.integers(0, 11), st.integers(0, 11)),
    max_size=120,
)


@settings(max_examples=150, deadline=None)
@given(ops)
def test_degree_bookkeeping_survives_any_mutation_sequence(seq):
    net = EconomyNetwork(12)
    for op, a, b in seq:
        if op == "add" and a != b:
            net.add_edge(a, b)
        elif op == "strip":
            net.remove_incoming(a, keep=b % 3)
        k_in, k_out = recount(net)
        assert net.k_in == k_in and net.k_out == k_out
        assert sum(net.k_in) == sum(net.k_out) == net.n_edges
    net.check_consistency()
