import json
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from econosim.economy_graph import from_edges
from econosim.geometry import (
    DisconnectedInputError,
    box_cover,
    clique,
    covering,
    family_dimensions,
    fractal_dimensions,
    giant_component,
    hop_distances,
    path,
    undirected_adjacency,
    write_geometry_json,
)


def ba_tree(n, seed):
    rng = random.Random(seed)
    edges, ends = [(1, 0)], [0, 1]
    for v in range(2, n):
        u = rng.choice(ends)
        edges.append((v, u))
        ends += [v, u]
    return n, edges


@pytest.mark.parametrize("l_B,expected", [(1, 9), (2, 5), (3, 3), (4, 3), (9, 1)])
def test_path_box_counts(l_B, expected):
    assert box_cover(path(9), l_B, 0, min_component=1) == expected


def test_single_node_boxes_at_unit_size():
    g = ba_tree(150, 2)
    assert box_cover(g, 1, 0) == 150


def test_one_box_beyond_diameter():
    g = ba_tree(150, 3)
    diam = int(hop_distances(giant_component(g)).max())
    assert box_cover(g, diam + 1, 0) == 1


def test_box_counts_monotone():
    g = ba_tree(400, 4)
    counts = [box_cover(g, l, 1, restarts=5) for l in range(1, 9)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_best_of_restarts_not_worse_than_single_runs():
    dist = hop_distances(giant_component(ba_tree(300, 5)))
    singles = [covering(dist, 3, random.Random(s), restarts=1).max() for s in range(10)]
    best = covering(dist, 3, random.Random(99), restarts=10).max()
    assert best <= max(singles)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_every_box_has_diameter_below_l_B(seed, l_B):
    g = nx.gnm_random_graph(60, 90, seed=seed)
    n, edges = 60, list(g.edges())
    if not edges:
        return
    adj = giant_component((n, edges), min_size=1)
    dist = hop_distances(adj)
    lab = covering(dist, l_B, random.Random(seed), restarts=2)
    for b in np.unique(lab):
        members = np.flatnonzero(lab == b)
        assert dist[np.ix_(members, members)].max() < l_B


def test_small_component_rejected():
    with pytest.raises(DisconnectedInputError):
        box_cover(path(50), 2, 0)


def test_undirected_projection_merges_reciprocal_edges():
    net = from_edges(3, [(0, 1), (1, 0), (0, 1), (1, 2)])
    adj = undirected_adjacency(net)
    assert adj.nnz == 4


def test_ba_tree_exponent():
    est = fractal_dimensions(ba_tree(2000, 1), ell=2, rng=0)
    assert est.gamma_geo == pytest.approx(3.0, abs=0.4)


def test_clique_family_exponent():
    est = family_dimensions([clique(n) for n in range(4, 40, 3)])
    assert est.gamma_geo == pytest.approx(2.0, abs=0.3)


def test_ell_validated():
    with pytest.raises(ValueError):
        fractal_dimensions(ba_tree(200, 0), ell=3)


def test_geometry_json(tmp_path):
    est = fractal_dimensions(ba_tree(300, 1), l_range=range(2, 5), restarts=2)
    write_geometry_json(est, tmp_path / "g.json")
    data = json.loads((tmp_path / "g.json").read_text())
    assert {"d_B", "d_k", "ell", "gamma_geo"} <= set(data)
    assert data["gamma_geo"] == pytest.approx(est.gamma_geo)
