"""Box-covering fractal dimensions of trade networks.

Distances are hop counts on the undirected projection of the largest weakly
connected component. A covering at size ``l_B`` puts nodes in the same box
only if every pair inside the box is closer than ``l_B``; it is built by
greedy colouring of the "too far apart" graph in random node order.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .economy_graph import EconomyNetwork


class DisconnectedInputError(ValueError):
    pass


@dataclass(frozen=True)
class FractalEstimate:
    d_B: float
    d_k: float
    ell: int
    gamma_geo: float
    r2: float
    boxes: list[tuple[int, int]] = field(default_factory=list)
    link_scale: list[tuple[int, float]] = field(default_factory=list)
    method: str = "links"

    def to_dict(self) -> dict:
        return asdict(self)


def _as_edges(net: EconomyNetwork | tuple[int, Iterable[tuple[int, int]]]) -> tuple[int, np.ndarray]:
    if isinstance(net, EconomyNetwork):
        return net.n_agents, net.edge_array()
    n, edges = net
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    return int(n), arr


def undirected_adjacency(net) -> sparse.csr_matrix:
    """Simple undirected graph (no multi-edges, no loops) as a CSR matrix."""
    n, edges = _as_edges(net)
    if len(edges) == 0:
        return sparse.csr_matrix((n, n), dtype=np.int8)
    a = sparse.coo_matrix((np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n))
    a = (a + a.T).tocsr()
    a.data[:] = 1
    a.setdiag(0)
    a.eliminate_zeros()
    return a


def giant_component(net, min_size: int = 100) -> sparse.csr_matrix:
    adj = undirected_adjacency(net)
    n_comp, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    big = int(np.argmax(sizes))
    if sizes[big] < min_size:
        raise DisconnectedInputError(f"largest component has {sizes[big]} nodes, need {min_size}")
    keep = np.flatnonzero(labels == big)
    return adj[keep][:, keep].tocsr()


def hop_distances(adj: sparse.csr_matrix) -> np.ndarray:
    d = csgraph.shortest_path(adj, method="D", unweighted=True, directed=False)
    return d


def _greedy_cover(dist: np.ndarray, l_B: int, order: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    colour = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n + 1, dtype=bool)
    for i in order:
        clash = colour[(dist[i] >= l_B) & (colour >= 0)]
        used[clash] = True
        c = int(np.argmin(used))
        used[clash] = False
        colour[i] = c
    return colour


def covering(dist: np.ndarray, l_B: int, rng: random.Random, restarts: int = 10) -> np.ndarray:
    """Box label per node for the smallest of ``restarts`` random coverings."""
    if l_B < 1:
        raise ValueError("l_B must be >= 1")
    n = dist.shape[0]
    best = None
    for _ in range(restarts):
        order = np.array(rng.sample(range(n), n), dtype=np.int64)
        lab = _greedy_cover(dist, l_B, order)
        if best is None or lab.max() < best.max():
            best = lab
    return best


def box_cover(
    net,
    l_B: int,
    rng: random.Random | int | None = None,
    restarts: int = 10,
    min_component: int = 100,
) -> int:
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    dist = hop_distances(giant_component(net, min_component))
    return int(covering(dist, l_B, rng, restarts).max()) + 1


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def _renormalized_links(coo: sparse.coo_matrix, lab: np.ndarray) -> np.ndarray:
    """Distinct undirected box pairs joined by at least one original link."""
    bi, bj = lab[coo.row], lab[coo.col]
    cross = bi != bj
    pairs = np.sort(np.stack([bi[cross], bj[cross]], axis=1), axis=1)
    return np.unique(pairs, axis=0)


def fractal_dimensions(
    net,
    l_range: Sequence[int] = range(2, 9),
    ell: int = 2,
    rng: random.Random | int | None = 0,
    restarts: int = 10,
    min_component: int = 100,
    method: str = "links",
    hub_fraction: float = 0.01,
) -> FractalEstimate:
    """Node and link dimensions from one sequence of box coverings.

    ``d_B`` is the decay rate of the box count. With ``method="links"``,
    ``d_k`` is the decay rate of the number of links in the renormalized
    network (boxes joined by at least one original link), so a tree, where
    links track agents, gives ``d_k = d_B``. With ``method="hub"`` the
    best-connected ``hub_fraction`` of nodes are tracked instead and ``d_k``
    is the decay rate of their box degree relative to their own degree.
    Scales where the covering has collapsed to a single box are dropped.
    """
    if ell not in (1, 2):
        raise ValueError("ell must be 1 (directed) or 2 (undirected)")
    if method not in ("links", "hub"):
        raise ValueError(f"unknown method {method!r}")
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    adj = giant_component(net, min_component)
    dist = hop_distances(adj)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    coo = adj.tocoo()
    n_hubs = max(5, int(round(hub_fraction * deg.size)))
    hubs = np.argsort(-deg, kind="stable")[:n_hubs]
    boxes, link_scale = [], []
    for l_B in l_range:
        lab = covering(dist, l_B, rng, restarts)
        nb = int(lab.max()) + 1
        boxes.append((int(l_B), nb))
        if nb < 2:
            continue
        pairs = _renormalized_links(coo, lab)
        if method == "links":
            link_scale.append((int(l_B), float(len(pairs))))
        else:
            box_deg = np.bincount(pairs.ravel(), minlength=nb)
            link_scale.append((int(l_B), float(np.mean(box_deg[lab[hubs]] / deg[hubs]))))
    usable = [(l, b) for l, b in boxes if b > 1]
    good = [(l, k) for l, k in link_scale if k > 0]
    if len(usable) < 2 or len(good) < 2:
        raise DisconnectedInputError("too few box sizes with more than one box")
    slope_b, r2_b = _fit_slope(np.log([l for l, _ in usable]), np.log([b for _, b in usable]))
    slope_k, r2_k = _fit_slope(np.log([l for l, _ in good]), np.log([k for _, k in good]))
    d_B, d_k = -slope_b, -slope_k
    gamma = 1.0 + ell * d_B / d_k if d_k != 0 else float("nan")
    return FractalEstimate(d_B, d_k, ell, gamma, min(r2_b, r2_k), boxes, good, method=method)


def family_dimensions(graphs: Sequence, ell: int = 2) -> FractalEstimate:
    """Dimension ratio from how link counts grow with agent counts across a family.

    Each member plays the role of one renormalization generation; links
    scale as ``Z^(d_k/d_B)``, so a log-log fit of links against agents gives
    the ratio directly (``d_B`` is normalised to 1).
    """
    sizes, links = [], []
    for g in graphs:
        adj = undirected_adjacency(g)
        sizes.append(adj.shape[0])
        links.append(adj.nnz // 2)
    ratio, r2 = _fit_slope(np.log(sizes), np.log(links))
    return FractalEstimate(1.0, ratio, ell, 1.0 + ell / ratio, r2,
                           list(zip(sizes, links)), [], method="family")


def clique(n: int) -> tuple[int, list[tuple[int, int]]]:
    return n, [(i, j) for i in range(n) for j in range(i + 1, n)]


def path(n: int) -> tuple[int, list[tuple[int, int]]]:
    return n, [(i, i + 1) for i in range(n - 1)]


def write_geometry_json(est: FractalEstimate, path_: str | Path) -> None:
    Path(path_).write_text(json.dumps(est.to_dict(), indent=2))
