"""Closed-form critical-state relations between gamma, q, omega and m."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .tail_stats import M_MAX, M_MIN

GAMMA_MIN, GAMMA_MAX = 2.0, 3.0

_EM_TERMS = 1000
# B_2k / (2k)! for k = 1..4
_BERNOULLI_RATIOS = (1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0)
_HEAD = np.arange(1, _EM_TERMS, dtype=float)


class DomainError(ValueError):
    pass


def riemann_zeta(s: float) -> float:
    """zeta(s) for real s > 1: 999 direct terms plus an order-4 Euler-Maclaurin tail."""
    if not s > 1.0:
        raise DomainError(f"zeta(s) requires s > 1, got {s}")
    n = float(_EM_TERMS)
    head = float(np.sum(_HEAD ** (-s)))
    tail = n ** (1.0 - s) / (s - 1.0) + 0.5 * n ** (-s)
    rising = s  # s (s+1) ... (s+2k-2)
    power = n ** (-s - 1.0)
    for k, b in enumerate(_BERNOULLI_RATIOS, start=1):
        tail += b * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= n * n
    return head + tail


def critical_omega(gamma: float, q: float) -> float:
    if not gamma > 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    if not q > 0.0:
        raise DomainError(f"q must be positive, got {q}")
    return q * riemann_zeta(2.0 * gamma - 1.0) ** (1.0 / gamma)


def omega_to_threshold(omega: float) -> float:
    if not omega > 0:
        raise DomainError("omega must be positive")
    return (omega - 1.0) / (omega + 1.0)


def threshold_to_omega(u: float) -> float:
    if not -1.0 < u < 1.0:
        raise DomainError("threshold must lie in (-1, 1)")
    return (1.0 + u) / (1.0 - u)


def ideal_degree_weights(gamma: float, q: float, kmax: int = 100_000) -> dict[int, float]:
    k = np.arange(1, kmax + 1, dtype=float)
    return dict(zip(range(1, kmax + 1), (q * k ** (-gamma)).tolist()))


def expected_branching(
    degree_hist: Mapping[int, float],
    omega: float,
    q: float,
    gamma: float,
    normalize: bool = False,
) -> float:
    """Expected secondary collapses per collapse: sum_k k P(k) q (omega k)^-gamma.

    ``degree_hist`` maps degree to P(k). Pass raw counts with
    ``normalize=True`` to evaluate on an empirical histogram.
    """
    ks = np.array([k for k in degree_hist if k >= 1], dtype=float)
    pk = np.array([degree_hist[int(k)] for k in ks], dtype=float)
    if normalize:
        total = sum(degree_hist.values())
        if total <= 0:
            raise DomainError("histogram is empty")
        pk = pk / total
    order = np.argsort(ks)[::-1]  # small terms first
    terms = ks[order] * pk[order] * q * (omega * ks[order]) ** (-gamma)
    return float(math.fsum(terms))


def exponent_map(gamma: float) -> float:
    return 1.5 * gamma - 1.0


def inverse_exponent_map(m: float) -> float:
    return 2.0 * (m + 1.0) / 3.0


def bounds_check(gamma: float | None = None, m: float | None = None) -> dict[str, bool]:
    out = {}
    if gamma is not None:
        out["gamma_in_bounds"] = GAMMA_MIN < gamma < GAMMA_MAX
    if m is not None:
        out["m_in_bounds"] = M_MIN < m < M_MAX
    return out


@dataclass(frozen=True)
class CriticalPoint:
    gamma: float
    q: float
    omega: float
    u_th: float
    m: float
    gamma_in_bounds: bool
    m_in_bounds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def critical_point(gamma: float, q: float) -> CriticalPoint:
    omega = critical_omega(gamma, q)
    m = exponent_map(gamma)
    flags = bounds_check(gamma=gamma, m=m)
    return CriticalPoint(gamma, q, omega, omega_to_threshold(omega), m, **flags)
