"""Exchange rates, agent energies, collapse cascades and the event-time loop."""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .config import SimConfig, TradeParams
from .economy_graph import BY_IN, BY_OUT, EconomyNetwork, init_network


class UndefinedCapitalError(ValueError):
    pass


class SimulationDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class AvalancheRecord:
    t: int
    agents_lost: int
    links_destroyed: int
    collapsed: tuple[int, ...] = field(default=(), repr=False, compare=False)


@dataclass
class SimulationOutput:
    u_total: np.ndarray
    returns: np.ndarray
    avalanches: list[AvalancheRecord]
    hist_in: dict[int, int]
    hist_out: dict[int, int]
    hist_in_accum: dict[int, int]
    n_edges: np.ndarray
    config: SimConfig
    seed: int
    network: EconomyNetwork | None = field(default=None, repr=False)

    @property
    def links_destroyed(self) -> np.ndarray:
        return np.array([a.links_destroyed for a in self.avalanches], dtype=np.int64)

    @property
    def agents_lost(self) -> np.ndarray:
        return np.array([a.agents_lost for a in self.avalanches], dtype=np.int64)

    def secondary_per_primary(self) -> float:
        """Mean number of follow-on collapses triggered by each avalanche seed."""
        if not self.avalanches:
            return float("nan")
        return float(self.agents_lost.mean() - 1.0)


def exchange_rate(k_out_i: float, k_in_j: float, p: TradeParams) -> float:
    """Logistic price of labor delivered by producer i to consumer j."""
    x = (k_out_i - k_in_j) / p.delta
    if x >= 0:
        return p.alpha_max / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return p.alpha_max * ex / (1.0 + ex)


def exchange_rates(k_out: np.ndarray, k_in: np.ndarray, p: TradeParams) -> np.ndarray:
    x = (np.asarray(k_out, dtype=float) - np.asarray(k_in, dtype=float)) / p.delta
    return p.alpha_max * 0.5 * (1.0 + np.tanh(0.5 * x))


def agent_energy_exact(net: EconomyNetwork, i: int, p: TradeParams) -> float:
    ko, ki = net.k_out, net.k_in
    u = 0.0
    for j in net.consumers_of(i):
        u += p.w * (1.0 - exchange_rate(ko[i], ki[j], p))
    for m in net.producers_of(i):
        u += p.w * (exchange_rate(ko[m], ki[i], p) - 1.0)
    return u


def agent_energies_exact(net: EconomyNetwork, p: TradeParams) -> np.ndarray:
    edges = net.edge_array()
    u = np.zeros(net.n_agents)
    if len(edges) == 0:
        return u
    ko = np.asarray(net.k_out)
    ki = np.asarray(net.k_in)
    gain = p.w * (1.0 - exchange_rates(ko[edges[:, 0]], ki[edges[:, 1]], p))
    np.add.at(u, edges[:, 0], gain)
    np.add.at(u, edges[:, 1], -gain)
    return u


def agent_energy_meanfield(k_out: float, k_in: float, beta: float) -> float:
    return beta * (k_out - k_in)


def capital(k_out: float, k_in: float, mode: str = "total") -> float:
    if k_in <= 0:
        raise UndefinedCapitalError("capital is undefined for an agent without consumption")
    if mode == "in_only":
        return k_out / k_in - 1.0
    if mode == "total":
        return (k_out - k_in) / (k_out + k_in)
    raise ValueError(f"unknown turnover mode {mode!r}")


def collapse_check(net: EconomyNetwork, i: int, p: TradeParams) -> bool:
    # agents with no incoming contracts carry no leverage and never collapse
    ki = net.k_in[i]
    if ki == 0:
        return False
    return capital(net.k_out[i], ki, p.turnover_mode) < p.c_th


def _violation_test(net: EconomyNetwork, p: TradeParams) -> Callable[[int], bool]:
    ko, ki, c = net.k_out, net.k_in, p.c_th
    if p.turnover_mode == "total":
        return lambda i: ki[i] > 0 and (ko[i] - ki[i]) / (ko[i] + ki[i]) < c
    return lambda i: ki[i] > 0 and ko[i] / ki[i] - 1.0 < c


def total_energy(net: EconomyNetwork, p: TradeParams) -> float:
    """Overall product: sum of W (1 - alpha) over every production link."""
    edges = net.edge_array()
    if len(edges) == 0:
        return 0.0
    ko = np.asarray(net.k_out)
    ki = np.asarray(net.k_in)
    return float(np.sum(p.w * (1.0 - exchange_rates(ko[edges[:, 0]], ki[edges[:, 1]], p))))


class EnergyLedger:
    """Keeps the overall product U_T in step with network mutations.

    Changing k_out(a) reprices a's outgoing edges and changing k_in(b) reprices
    b's incoming edges; every mutation subtracts the affected edges' values,
    applies the change and adds them back.
    """

    def __init__(self, net: EconomyNetwork, p: TradeParams):
        self.net = net
        self.p = p
        self.value = total_energy(net, p)

    def _affected_sum(self, out_agents: Iterable[int], in_agents: Iterable[int]) -> float:
        net, p = self.net, self.p
        ko, ki, prod, cons = net.k_out, net.k_in, net.producer, net.consumer
        seen: set[int] = set()
        for a in out_agents:
            seen.update(net.out_edges[a])
        for b in in_agents:
            seen.update(net.in_edges[b])
        amax, delta = p.alpha_max, p.delta
        s = 0.0
        for e in seen:
            x = (ko[prod[e]] - ki[cons[e]]) / delta
            if x >= 0:
                s += 1.0 - amax / (1.0 + math.exp(-x))
            else:
                ex = math.exp(x)
                s += 1.0 - amax * ex / (1.0 + ex)
        return p.w * s

    def add_edge(self, producer: int, consumer: int) -> None:
        before = self._affected_sum((producer,), (consumer,))
        self.net.add_edge(producer, consumer)
        self.value += self._affected_sum((producer,), (consumer,)) - before

    def remove_incoming(self, agent: int, keep: int = 1) -> list[tuple[int, int]]:
        net = self.net
        ids = list(net.in_edges[agent])
        if len(ids) <= keep:
            return []
        producers = {net.producer[e] for e in ids[: len(ids) - keep]}
        before = self._affected_sum(producers, (agent,))
        removed = net.remove_incoming(agent, keep)
        self.value += self._affected_sum(producers, (agent,)) - before
        return removed

    def resync(self) -> float:
        drift = self.value - total_energy(self.net, self.p)
        self.value -= drift
        return drift


def cascade(
    net: EconomyNetwork,
    seed_agent: int,
    p: TradeParams,
    t: int = 0,
    ledger: EnergyLedger | None = None,
) -> AvalancheRecord:
    """Breadth-first collapse chain started by ``seed_agent``.

    A collapsing agent keeps only its newest incoming edge; each producer that
    loses a link is re-tested and enqueued at most once per avalanche.
    """
    violates = _violation_test(net, p)
    remove = ledger.remove_incoming if ledger is not None else net.remove_incoming
    queue = deque([seed_agent])
    queued = {seed_agent}
    collapsed: list[int] = []
    links = 0
    while queue:
        i = queue.popleft()
        if not violates(i):
            continue
        collapsed.append(i)
        for j, _ in remove(i, 1):
            links += 1
            if j not in queued and violates(j):
                queued.add(j)
                queue.append(j)
    return AvalancheRecord(t, len(collapsed), links, tuple(collapsed))


@dataclass
class StepOutcome:
    added: int
    avalanches: list[AvalancheRecord]
    reseeded: int
    u_total: float


class Simulation:
    """Event-time loop over one network; one call to :meth:`step` per event."""

    max_cascades_per_step = 1000

    def __init__(self, config: SimConfig, network: EconomyNetwork | None = None):
        if config.c_th >= 0:
            raise ValueError(
                "c_th must be negative: a fresh agent (k_in = k_out = 1) has capital 0 "
                "and would violate any threshold >= 0"
            )
        self.config = config
        self.params = config.trade_params()
        self.rng = random.Random(config.seed)
        self.net = network if network is not None else init_network(config.n, config.k0, self.rng)
        self.ledger = EnergyLedger(self.net, self.params)
        self._violates = _violation_test(self.net, self.params)
        self.t = 0
        # the starting network is arbitrary, so clear any initial violators
        self._settle(deque(range(self.net.n_agents)))

    @property
    def u_total(self) -> float:
        return self.ledger.value

    def _new_links(self) -> int:
        q = self.params.q
        base = int(math.floor(q))
        frac = q - base
        if frac > 0 and self.rng.random() < frac:
            base += 1
        return base

    def _reseed(self, agent: int, pending: deque) -> None:
        # a collapsed agent left without production re-enters with one fresh
        # outgoing contract; it already holds its one retained incoming edge
        net = self.net
        if net.k_in[agent] == 0:
            self.ledger.add_edge(net.sample_excluding(BY_OUT, self.rng, agent), agent)
        consumer = net.sample_excluding(BY_IN, self.rng, agent)
        self.ledger.add_edge(agent, consumer)
        pending.append(consumer)

    def step(self) -> StepOutcome:
        net, rng = self.net, self.rng
        pending: deque[int] = deque()
        added = self._new_links()
        for _ in range(added):
            while True:
                prod = net.sample_preferential(BY_OUT, rng)
                cons = net.sample_preferential(BY_IN, rng)
                if prod != cons:
                    break
            self.ledger.add_edge(prod, cons)
            pending.append(cons)

        records, reseeded = self._settle(pending)
        self.t += 1
        return StepOutcome(added, records, reseeded, self.ledger.value)

    def _settle(self, pending: deque) -> tuple[list[AvalancheRecord], int]:
        """Run cascades from queued agents (FIFO) until nobody violates."""
        violates = self._violates
        records: list[AvalancheRecord] = []
        reseeded = 0
        limit = self.max_cascades_per_step * self.net.n_agents
        while pending:
            a = pending.popleft()
            if not violates(a):
                continue
            rec = cascade(self.net, a, self.params, self.t, self.ledger)
            records.append(rec)
            for i in rec.collapsed:
                if violates(i):
                    self._reseed(i, pending)
                    reseeded += 1
            if len(records) > limit:
                raise SimulationDiverged(f"collapse chain did not settle at t={self.t}")
        return records, reseeded

    def violators(self) -> list[int]:
        return [i for i in range(self.net.n_agents) if self._violates(i)]


def step(sim: Simulation) -> StepOutcome:
    return sim.step()


def simple_returns(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    prev = u[:-1]
    out = np.full(len(prev), np.nan)
    ok = prev != 0
    out[ok] = (u[1:][ok] - prev[ok]) / prev[ok]
    return out


def run(
    config: SimConfig,
    observer: Callable[[Simulation, StepOutcome], None] | None = None,
    keep_network: bool = True,
) -> SimulationOutput:
    """Warm up, then record U_T and avalanches for ``config.steps`` events.

    ``u_total[0]`` is the overall product at the end of the warmup, and an
    avalanche with event time ``t`` happened during the step producing
    ``u_total[t]``.
    """
    if config.steps < 0:
        raise ValueError("steps must be non-negative")
    sim = Simulation(config)
    n = config.n
    for _ in range(config.warmup_steps):
        sim.step()
    sim.ledger.resync()
    sim.t = 1

    u = np.empty(config.steps + 1)
    n_edges = np.empty(config.steps + 1, dtype=np.int64)
    u[0] = sim.u_total
    n_edges[0] = sim.net.n_edges
    avalanches: list[AvalancheRecord] = []
    accum: Counter[int] = Counter()
    for s in range(1, config.steps + 1):
        out = sim.step()
        if out.avalanches:
            # drop the member lists; long runs record millions of events
            avalanches.extend(AvalancheRecord(a.t, a.agents_lost, a.links_destroyed) for a in out.avalanches)
        if s % n == 0:
            sim.ledger.resync()
            accum.update(sim.net.k_in)
        u[s] = sim.ledger.value
        n_edges[s] = sim.net.n_edges
        if observer is not None:
            observer(sim, out)

    return SimulationOutput(
        u_total=u,
        returns=simple_returns(u),
        avalanches=avalanches,
        hist_in=sim.net.degree_histogram(BY_IN),
        hist_out=sim.net.degree_histogram(BY_OUT),
        hist_in_accum=dict(sorted(accum.items())),
        n_edges=n_edges,
        config=config,
        seed=config.seed,
        network=sim.net if keep_network else None,
    )


class ThresholdNotBracketed(RuntimeError):
    pass


@dataclass
class ThresholdSearch:
    c_th: float
    bracket: tuple[float, float]
    probes: list[tuple[float, float]]  # (c_th, secondary collapses per avalanche)
    output: SimulationOutput | None = field(default=None, repr=False)


def locate_critical_threshold(
    config: SimConfig,
    lo: float = -0.8,
    hi: float = -0.4,
    tol: float = 0.005,
    target: float = 1.0,
    probe_steps: int | None = None,
    max_rate: float = 10.0,
) -> ThresholdSearch:
    """Bisect c_th for one secondary collapse per avalanche seed on average.

    Lower thresholds let the network grow and collapses stay isolated;
    higher ones keep it stationary with branching chains. The search returns
    the upper end of the final bracket, the least demanding threshold whose
    probe reached ``target``, together with that probe's full output when
    probes run the configured length.
    """
    steps = config.steps if probe_steps is None else probe_steps
    probes: list[tuple[float, float]] = []
    runs: dict[float, SimulationOutput] = {}

    def measure(c: float) -> float:
        seen = [0]

        def guard(sim: Simulation, outcome: StepOutcome) -> None:
            seen[0] += len(outcome.avalanches)
            if seen[0] > max_rate * max(sim.t, 1000):
                raise SimulationDiverged(f"more than {max_rate} avalanches per step at c_th={c}")

        try:
            out = run(config.with_overrides(c_th=c, steps=steps), observer=guard, keep_network=False)
        except SimulationDiverged:
            probes.append((c, math.inf))
            return math.inf
        s = out.secondary_per_primary()
        s = 0.0 if math.isnan(s) else s
        probes.append((c, s))
        if s >= target:
            # only the latest upper end can be returned
            runs.clear()
            runs[c] = out
        return s

    if measure(lo) >= target:
        raise ThresholdNotBracketed(f"already at or above target at c_th={lo}")
    if measure(hi) < target:
        raise ThresholdNotBracketed(f"still below target at c_th={hi}")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if measure(mid) < target:
            a = mid
        else:
            b = mid
    keep = runs.get(b) if steps == config.steps else None
    return ThresholdSearch(b, (a, b), probes, keep)
