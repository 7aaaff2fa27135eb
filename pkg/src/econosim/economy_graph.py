"""Directed trade multigraph with preferential sampling.

Agents are integer indices ``0..n-1``. An edge ``producer -> consumer`` is one
labor contract: outgoing (production) for the producer, incoming (consumption)
for the consumer. Parallel edges are allowed, self-loops are not.

Preferential draws use weight ``k + 1``. Sampling is exact and O(1): with
``E`` live edges, draw ``u`` uniformly in ``[0, n + E)``; ``u < n`` picks agent
``u``, otherwise the endpoint of live edge ``u - n``. Agent ``i`` therefore
comes up with probability ``(k_i + 1) / (n + E)``.
"""

from __future__ import annotations

import csv
import random
from collections import Counter
from pathlib import Path
from typing import Iterable

import numpy as np

BY_IN = "by_in"
BY_OUT = "by_out"


class SelfLoopError(ValueError):
    pass


class EconomyNetwork:
    """Mutable multigraph with cached degrees and insertion-ordered adjacency.

    ``in_edges[i]`` and ``out_edges[i]`` are dicts used as ordered sets of
    edge ids, so the newest incoming contract of an agent is the last key.
    """

    def __init__(self, n_agents: int):
        if n_agents < 1:
            raise ValueError("n_agents must be positive")
        self.n_agents = n_agents
        self.k_in = [0] * n_agents
        self.k_out = [0] * n_agents
        self.in_edges: list[dict[int, None]] = [{} for _ in range(n_agents)]
        self.out_edges: list[dict[int, None]] = [{} for _ in range(n_agents)]
        # edge id -> endpoints; ids of removed edges are recycled
        self.producer: list[int] = []
        self.consumer: list[int] = []
        self._pos: list[int] = []  # index into self._live, -1 when dead
        self._live: list[int] = []
        self._free: list[int] = []

    def __len__(self) -> int:
        return len(self._live)

    @property
    def n_edges(self) -> int:
        return len(self._live)

    def add_edge(self, producer: int, consumer: int) -> int:
        if producer == consumer:
            raise SelfLoopError(f"self-loop rejected for agent {producer}")
        if self._free:
            e = self._free.pop()
            self.producer[e] = producer
            self.consumer[e] = consumer
            self._pos[e] = len(self._live)
        else:
            e = len(self.producer)
            self.producer.append(producer)
            self.consumer.append(consumer)
            self._pos.append(len(self._live))
        self._live.append(e)
        self.k_out[producer] += 1
        self.k_in[consumer] += 1
        self.out_edges[producer][e] = None
        self.in_edges[consumer][e] = None
        return e

    def remove_edge(self, e: int) -> tuple[int, int]:
        pos = self._pos[e]
        if pos < 0:
            raise KeyError(f"edge {e} is not live")
        last = self._live[-1]
        self._live[pos] = last
        self._pos[last] = pos
        self._live.pop()
        self._pos[e] = -1
        self._free.append(e)
        p, c = self.producer[e], self.consumer[e]
        self.k_out[p] -= 1
        self.k_in[c] -= 1
        del self.out_edges[p][e]
        del self.in_edges[c][e]
        return p, c

    def remove_incoming(self, agent: int, keep: int = 1) -> list[tuple[int, int]]:
        """Drop all but the ``keep`` newest incoming edges of ``agent``."""
        ids = list(self.in_edges[agent])
        n_drop = len(ids) - keep
        if n_drop <= 0:
            return []
        return [self.remove_edge(e) for e in ids[:n_drop]]

    def sample_preferential(self, direction: str, rng: random.Random) -> int:
        n = self.n_agents
        u = rng.randrange(n + len(self._live))
        if u < n:
            return u
        e = self._live[u - n]
        if direction == BY_IN:
            return self.consumer[e]
        if direction == BY_OUT:
            return self.producer[e]
        raise ValueError(f"unknown direction {direction!r}")

    def sample_excluding(self, direction: str, rng: random.Random, exclude: int) -> int:
        while True:
            a = self.sample_preferential(direction, rng)
            if a != exclude:
                return a

    def preferential_weights(self, direction: str) -> np.ndarray:
        k = self.k_in if direction == BY_IN else self.k_out
        w = np.asarray(k, dtype=float) + 1.0
        return w / w.sum()

    def edge_array(self) -> np.ndarray:
        """Live edges as an ``(E, 2)`` int array of ``(producer, consumer)``."""
        if not self._live:
            return np.empty((0, 2), dtype=np.int64)
        ids = np.fromiter(self._live, dtype=np.int64, count=len(self._live))
        prod = np.asarray(self.producer, dtype=np.int64)[ids]
        cons = np.asarray(self.consumer, dtype=np.int64)[ids]
        return np.column_stack([prod, cons])

    def edges(self) -> list[tuple[int, int]]:
        return [(self.producer[e], self.consumer[e]) for e in self._live]

    def producers_of(self, agent: int) -> list[int]:
        return [self.producer[e] for e in self.in_edges[agent]]

    def consumers_of(self, agent: int) -> list[int]:
        return [self.consumer[e] for e in self.out_edges[agent]]

    def degree_histogram(self, direction: str) -> dict[int, int]:
        k = self.k_in if direction == BY_IN else self.k_out
        return dict(sorted(Counter(k).items()))

    def check_consistency(self) -> None:
        """Recount degrees from the edge list; raise AssertionError on mismatch."""
        k_in = [0] * self.n_agents
        k_out = [0] * self.n_agents
        for p, c in self.edges():
            assert p != c
            k_out[p] += 1
            k_in[c] += 1
        assert k_in == self.k_in, "cached k_in out of sync"
        assert k_out == self.k_out, "cached k_out out of sync"
        assert sum(len(d) for d in self.in_edges) == len(self._live)
        assert sum(len(d) for d in self.out_edges) == len(self._live)

    def copy(self) -> "EconomyNetwork":
        other = EconomyNetwork(self.n_agents)
        for p, c in self.edges():
            other.add_edge(p, c)
        return other


def init_network(n: int, k0: int, rng_seed: int | random.Random) -> EconomyNetwork:
    """Grow the starting network one agent at a time.

    Agent ``i`` places ``k0`` outgoing links on agents ``0..i-1`` with
    probability proportional to ``k_in + 1`` among them, which gives a
    scale-free in-degree tail. Agent 0 has no predecessors, so it links last,
    over the whole population.
    """
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    if not 1 <= k0 < n:
        raise ValueError(f"k0 must satisfy 1 <= k0 < n, got k0={k0}, n={n}")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    net = EconomyNetwork(n)
    for i in range(1, n):
        for _ in range(k0):
            # every live edge so far points into 0..i-1
            u = rng.randrange(i + len(net._live))
            net.add_edge(i, u if u < i else net.consumer[net._live[u - i]])
    for _ in range(k0):
        net.add_edge(0, net.sample_excluding(BY_IN, rng, 0))
    return net


def sample_preferential(net: EconomyNetwork, direction: str, rng: random.Random) -> int:
    return net.sample_preferential(direction, rng)


def add_edge(net: EconomyNetwork, producer: int, consumer: int) -> EconomyNetwork:
    net.add_edge(producer, consumer)
    return net


def remove_incoming(net: EconomyNetwork, agent: int, keep: int = 1) -> list[tuple[int, int]]:
    return net.remove_incoming(agent, keep)


def degree_histogram(net: EconomyNetwork, direction: str) -> dict[int, int]:
    return net.degree_histogram(direction)


def from_edges(n_agents: int, edges: Iterable[tuple[int, int]]) -> EconomyNetwork:
    net = EconomyNetwork(n_agents)
    for p, c in edges:
        net.add_edge(int(p), int(c))
    return net


def write_edges_csv(net: EconomyNetwork, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["producer", "consumer"])
        w.writerows(net.edges())


def read_edges_csv(path: str | Path, n_agents: int | None = None) -> EconomyNetwork:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["producer", "consumer"]:
            raise ValueError(f"{path}: expected header 'producer,consumer'")
        edges = [(int(r["producer"]), int(r["consumer"])) for r in reader]
    if n_agents is None:
        n_agents = 1 + max((max(p, c) for p, c in edges), default=-1)
    return from_edges(n_agents, edges)


def write_histogram_csv(hist: dict[int, int], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "count"])
        w.writerows(sorted(hist.items()))
