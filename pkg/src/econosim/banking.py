"""Banking reading of the trade model: minimum-capital sweeps and policy paths.

Agents are banks, links are debtor contracts and collapses are bankruptcies.
A scenario is one (c_th, L) cell; its business level is the time-averaged
overall product per bank over the trailing half of the recorded run.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import SimConfig
from .tail_stats import InsufficientTailError, TailFit, fit_tail_exponent
from .trade_dynamics import run

L_MIN = 100


class NoSolution(RuntimeError):
    pass


def banking_base(**overrides) -> SimConfig:
    """Default banking configuration.

    Capital is measured against incoming contracts only and every scenario
    runs the same number of steps regardless of L, so business levels of
    different system sizes are length-matched.
    """
    base = SimConfig(n=2000, turnover_mode="in_only", c_th=-0.71, steps=100_000, warmup=20_000, seed=0)
    return base.with_overrides(**overrides)


@dataclass(frozen=True)
class ScenarioResult:
    c_th: float
    L: int
    omega_level: float
    tail: TailFit | None
    u_mean: float
    n_avalanches: int = 0
    seeds: tuple[int, ...] = ()
    steps: int = 0
    warmup: int = 0

    @property
    def m(self) -> float:
        return self.tail.exponent if self.tail is not None else float("nan")

    def to_row(self) -> dict:
        return {
            "c_th": self.c_th,
            "L": self.L,
            "omega_level": self.omega_level,
            "m": self.m,
            "n_avalanches": self.n_avalanches,
        }


def scenario_seed(c_th: float, L: int, base_seed: int, replica: int = 0) -> int:
    """Seed that depends only on the cell, never on evaluation order."""
    key = [int(base_seed), int(L), int(round((c_th + 1.0) * 1e9)), int(replica)]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint32)[0])


def business_level(u_series: Sequence[float], L: int, window: int) -> float:
    u = np.asarray(u_series, dtype=float)
    if L <= 0:
        raise ValueError("L must be positive")
    if not 1 <= window <= u.size:
        raise ValueError(f"window must lie in [1, {u.size}], got {window}")
    return float(u[-window:].mean() / L)


def run_scenario(
    c_th: float,
    L: int,
    base: SimConfig | None = None,
    replicas: int = 1,
    min_tail: int = 50,
) -> ScenarioResult:
    """Simulate one cell and fit the tail of its link-count avalanche sizes."""
    base = base if base is not None else banking_base()
    if L < L_MIN:
        raise ValueError(f"L must be >= {L_MIN}, got {L}")
    if not -1.0 < c_th < 1.0:
        raise ValueError(f"c_th must lie in (-1, 1), got {c_th}")
    sizes, levels, means, seeds = [], [], [], []
    for r in range(replicas):
        seed = scenario_seed(c_th, L, base.seed, r)
        cfg = base.with_overrides(n=int(L), c_th=float(c_th), seed=seed,
                                  warmup=base.warmup_steps)
        out = run(cfg, keep_network=False)
        window = max(1, cfg.steps // 2)
        levels.append(business_level(out.u_total, L, window))
        means.append(float(out.u_total[-window:].mean()))
        k = out.links_destroyed
        sizes.append(k[k > 0])
        seeds.append(seed)
    pooled = np.concatenate(sizes) if sizes else np.empty(0)
    try:
        tail = fit_tail_exponent(pooled, discrete=True, min_tail=min_tail)
    except InsufficientTailError:
        tail = None
    return ScenarioResult(
        c_th=float(c_th),
        L=int(L),
        omega_level=float(np.mean(levels)),
        tail=tail,
        u_mean=float(np.mean(means)),
        n_avalanches=int(pooled.size),
        seeds=tuple(seeds),
        steps=base.steps,
        warmup=base.warmup_steps,
    )


@dataclass
class SweepSurface:
    c_grid: tuple[float, ...]
    L_grid: tuple[int, ...]
    results: list[ScenarioResult] = field(default_factory=list)

    def cell(self, c_th: float, L: int) -> ScenarioResult:
        for r in self.results:
            if r.L == L and math.isclose(r.c_th, c_th, abs_tol=1e-12):
                return r
        raise KeyError((c_th, L))

    def grid(self, attr: str) -> np.ndarray:
        return np.array([[getattr(self.cell(c, L), attr) for L in self.L_grid] for c in self.c_grid])

    def m_normalized(self) -> np.ndarray:
        """Exponents rescaled so the grid minimum maps to 0 and the maximum to 1."""
        m = self.grid("m")
        if np.all(np.isnan(m)):
            return m
        lo, hi = np.nanmin(m), np.nanmax(m)
        if not hi > lo:
            return np.where(np.isnan(m), np.nan, 0.0)
        return (m - lo) / (hi - lo)

    def write_csv(self, path: str | Path) -> None:
        mbar = self.m_normalized()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["c_th", "L", "omega_level", "m", "m_normalized", "n_avalanches"])
            for i, c in enumerate(self.c_grid):
                for j, L in enumerate(self.L_grid):
                    r = self.cell(c, L)
                    w.writerow([repr(r.c_th), r.L, repr(r.omega_level), repr(r.m),
                                repr(float(mbar[i, j])), r.n_avalanches])


def _cell(args) -> ScenarioResult:
    c, L, base, replicas = args
    return run_scenario(c, L, base, replicas)


def sweep(
    c_grid: Sequence[float],
    L_grid: Sequence[int],
    base: SimConfig | None = None,
    workers: int | None = None,
    replicas: int = 1,
) -> SweepSurface:
    base = base if base is not None else banking_base()
    jobs = [(float(c), int(L), base, replicas) for c in c_grid for L in L_grid]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        results = [_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_cell, jobs))
    return SweepSurface(tuple(float(c) for c in c_grid), tuple(int(L) for L in L_grid), results)


def constant_L_path(c_target: float, reference: ScenarioResult, base: SimConfig | None = None,
                    replicas: int = 1) -> ScenarioResult:
    return run_scenario(c_target, reference.L, base, replicas)


def constant_omega_path(
    c_target: float,
    reference: ScenarioResult,
    base: SimConfig | None = None,
    rel_tol: float = 0.05,
    replicas: int = 1,
    max_evals: int = 30,
    trace: list[ScenarioResult] | None = None,
    evaluate: Callable[[float, int], ScenarioResult] | None = None,
) -> ScenarioResult:
    """Find the system size whose business level at ``c_target`` matches the reference.

    The bracket is grown geometrically from the reference size, alternating
    downward and upward, inside [100, 10 L_ref]; then bisected on integer L
    until the relative mismatch is within ``rel_tol``.
    """
    if math.isclose(c_target, reference.c_th, abs_tol=1e-12):
        return reference
    evaluate = evaluate or (lambda c, L: run_scenario(c, L, base, replicas))
    target = reference.omega_level
    seen: dict[int, ScenarioResult] = {}

    def at(L: int) -> ScenarioResult:
        L = int(min(max(L, L_MIN), 10 * reference.L))
        if L not in seen:
            if len(seen) >= max_evals:
                raise NoSolution(f"no match within {max_evals} evaluations")
            seen[L] = evaluate(c_target, L)
            if trace is not None:
                trace.append(seen[L])
        return seen[L]

    def gap(r: ScenarioResult) -> float:
        return r.omega_level - target

    def close(r: ScenarioResult) -> bool:
        return abs(gap(r)) <= rel_tol * abs(target)

    ref_here = at(reference.L)
    if close(ref_here):
        return ref_here
    bracket = None
    lo_L, hi_L = reference.L, reference.L
    while bracket is None:
        moved = False
        if lo_L > L_MIN:
            prev, lo_L = lo_L, max(L_MIN, lo_L // 2)
            r = at(lo_L)
            moved = True
            if close(r):
                return r
            if np.sign(gap(r)) != np.sign(gap(ref_here)):
                bracket = (lo_L, prev)
                break
        if hi_L < 10 * reference.L:
            prev, hi_L = hi_L, min(10 * reference.L, hi_L * 2)
            r = at(hi_L)
            moved = True
            if close(r):
                return r
            if np.sign(gap(r)) != np.sign(gap(ref_here)):
                bracket = (prev, hi_L)
                break
        if not moved:
            raise NoSolution(
                f"business level {target:.6g} not bracketed for L in [{L_MIN}, {10 * reference.L}]"
            )
    a, b = bracket
    ga = gap(at(a))
    while b - a > 1:
        mid = (a + b) // 2
        r = at(mid)
        if close(r):
            return r
        if np.sign(gap(r)) == np.sign(ga):
            a, ga = mid, gap(r)
        else:
            b = mid
    best = min((at(a), at(b)), key=lambda r: abs(gap(r)))
    if not close(best):
        raise NoSolution(f"closest match L={best.L} misses by {abs(gap(best)) / abs(target):.1%}")
    return best


def write_isoline_csv(rows: Sequence[ScenarioResult], path: str | Path, label: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "c_th", "L", "omega_level", "m", "n_avalanches"])
        for r in rows:
            w.writerow([label, repr(r.c_th), r.L, repr(r.omega_level), repr(r.m), r.n_avalanches])
