"""Heavy-tail measurement: returns, sign-run events, CCDFs and exponent fits."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize, special, stats

M_MIN, M_MAX = 2.0, 3.5
MIN_TAIL = 50


class NonPositivePriceError(ValueError):
    pass


class InsufficientTailError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    start: int
    length: int
    sign: int  # +1 or -1
    cumulative_return: float


@dataclass(frozen=True)
class TailFit:
    exponent: float  # CCDF exponent m: P(S >= s) ~ s^-m
    xmin: float
    ks_stat: float
    n_tail: int
    n_total: int = 0
    loglik_ratio_exp: float = float("nan")  # normalized power-law vs exponential
    p_exp: float = float("nan")

    @property
    def density_exponent(self) -> float:
        return self.exponent + 1.0

    @property
    def reliable(self) -> bool:
        return self.n_tail >= MIN_TAIL

    @property
    def in_bounds(self) -> bool:
        return M_MIN < self.exponent < M_MAX

    @property
    def poor_fit(self) -> bool:
        """Exponential decay is significantly more likely than a power law."""
        return self.loglik_ratio_exp < 0 and self.p_exp < 0.1

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(in_bounds=self.in_bounds, reliable=self.reliable, poor_fit=self.poor_fit)
        return d


def log_returns(prices: Sequence[float]) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if p.size < 2:
        raise ValueError("need at least two prices")
    if np.any(~(p > 0)):
        raise NonPositivePriceError("all prices must be strictly positive")
    return np.diff(np.log(p))


def segment_events(returns: Sequence[float]) -> list[Event]:
    """Split a return series into maximal runs of one sign.

    Zero returns join the run in progress; leading zeros join the first run.
    """
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        return []
    signs = np.sign(r).astype(int)
    nz = np.flatnonzero(signs)
    if nz.size == 0:
        return [Event(0, int(r.size), 1, 0.0)]
    # forward-fill zeros, back-fill the leading ones
    idx = np.where(signs != 0, np.arange(r.size), 0)
    np.maximum.accumulate(idx, out=idx)
    filled = signs[idx]
    filled[: nz[0]] = signs[nz[0]]
    cuts = np.flatnonzero(np.diff(filled)) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [r.size]])
    csum = np.concatenate([[0.0], np.cumsum(r)])
    return [
        Event(int(s), int(e - s), int(filled[s]), float(csum[e] - csum[s]))
        for s, e in zip(starts, ends)
    ]


def extract_avalanches(events: Iterable[Event], sign: int = -1, metric: str = "cum_return") -> np.ndarray:
    sel = [ev for ev in events if ev.sign == sign]
    if metric == "cum_return":
        return np.array([abs(ev.cumulative_return) for ev in sel], dtype=float)
    if metric == "run_length":
        return np.array([ev.length for ev in sel], dtype=float)
    raise ValueError(f"unknown size metric {metric!r}")


def ccdf(samples: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sample values and the fraction of samples >= each of them."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        return x, x
    values, first = np.unique(x, return_index=True)
    return values, 1.0 - first / x.size


def _hill(tail: np.ndarray, xmin: float, shift: float) -> float:
    return tail.size / np.sum(np.log(tail / (xmin - shift)))


def _ks(tail: np.ndarray, xmin: float, m: float, shift: float) -> float:
    values, frac = ccdf(tail)
    model = ((values - shift) / (xmin - shift)) ** (-m)
    return float(np.max(np.abs(frac - model)))


def _xmin_candidates(x: np.ndarray, min_tail: int, max_candidates: int = 200) -> np.ndarray:
    # x sorted ascending; the candidate must leave at least min_tail samples
    upper = x[x.size - min_tail]
    uniq = np.unique(x[x <= upper])
    if uniq.size <= max_candidates:
        return uniq
    q = np.linspace(0.0, 1.0, max_candidates)
    return np.unique(np.quantile(uniq, q, method="nearest"))


def compare_exponential(tail: np.ndarray, xmin: float, m: float, shift: float = 0.0) -> tuple[float, float]:
    """Vuong test of the fitted power law against a shifted exponential.

    Returns the normalized log-likelihood ratio (positive favours the power
    law) and its two-sided p-value.
    """
    lam = 1.0 / np.mean(tail - xmin) if np.mean(tail - xmin) > 0 else np.inf
    if not np.isfinite(lam):
        return float("nan"), float("nan")
    ll_pl = np.log(m) - np.log(xmin - shift) - (m + 1.0) * np.log((tail - shift) / (xmin - shift))
    ll_ex = np.log(lam) - lam * (tail - xmin)
    d = ll_pl - ll_ex
    sd = d.std()
    if sd == 0:
        return float("nan"), float("nan")
    z = d.sum() / (sd * math.sqrt(d.size))
    return float(z), float(2.0 * stats.norm.sf(abs(z)))


def fit_tail_exponent(
    samples: Sequence[float],
    xmin: float | None = None,
    discrete: bool = False,
    min_tail: int = MIN_TAIL,
) -> TailFit:
    """Hill-type maximum-likelihood estimate of the CCDF exponent.

    With ``xmin=None`` the cutoff is scanned over the sample values and the
    one minimizing the Kolmogorov-Smirnov distance is kept. ``discrete``
    applies the usual half-unit shift for integer-valued sizes.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[np.isfinite(x) & (x > 0)]
    shift = 0.5 if discrete else 0.0
    if xmin is not None:
        tail = x[x >= xmin]
        if tail.size < min_tail or xmin <= shift:
            raise InsufficientTailError(f"{tail.size} samples above xmin={xmin}, need {min_tail}")
        m = _hill(tail, xmin, shift)
        best = (m, float(xmin), _ks(tail, xmin, m, shift), tail)
    else:
        if x.size < min_tail:
            raise InsufficientTailError(f"{x.size} positive samples, need {min_tail}")
        best = None
        for xm in _xmin_candidates(x, min_tail):
            if xm <= shift:
                continue
            tail = x[np.searchsorted(x, xm, side="left"):]
            if tail.size < min_tail:
                break
            m = _hill(tail, xm, shift)
            d = _ks(tail, xm, m, shift)
            if best is None or d < best[2]:
                best = (m, float(xm), d, tail)
        if best is None:
            raise InsufficientTailError("no admissible cutoff")
    m, xm, d, tail = best
    lr, p = compare_exponential(tail, xm, m, shift)
    return TailFit(float(m), xm, float(d), int(tail.size), int(x.size), lr, p)


def fit_degree_tail(hist: Mapping[int, int], kmin: int | None = None, min_tail: int = MIN_TAIL) -> TailFit:
    """Discrete power-law MLE for a degree histogram, P(k) ~ k^-gamma for k >= kmin.

    The returned ``exponent`` is gamma itself (a density exponent), unlike
    :func:`fit_tail_exponent` which reports CCDF exponents.
    """
    ks = np.array(sorted(k for k, c in hist.items() if k > 0 and c > 0), dtype=float)
    cnt = np.array([hist[int(k)] for k in ks], dtype=float)
    if ks.size == 0:
        raise InsufficientTailError("empty histogram")
    candidates = [kmin] if kmin is not None else list(ks)
    best = None
    for km in candidates:
        mask = ks >= km
        k, c = ks[mask], cnt[mask]
        n = c.sum()
        if n < min_tail or k.size < 2:
            if kmin is not None:
                raise InsufficientTailError(f"{int(n)} agents with degree >= {km}")
            break
        slog = float(np.sum(c * np.log(k)))

        def nll(g, km=km, slog=slog, n=n):
            return g * slog + n * np.log(special.zeta(g, km))

        g = optimize.minimize_scalar(nll, bounds=(1.01, 10.0), method="bounded",
                                     options={"xatol": 1e-8}).x
        grid = np.arange(km, k.max() + 1)
        cdf_fit = np.cumsum(grid ** (-g)) / special.zeta(g, km)
        cdf_emp = np.cumsum(c) / n
        d = float(np.max(np.abs(cdf_emp - cdf_fit[(k - km).astype(int)])))
        if best is None or d < best[2]:
            best = (float(g), float(km), d, int(n))
    if best is None:
        raise InsufficientTailError(f"fewer than {min_tail} agents in any admissible tail")
    g, km, d, n = best
    return TailFit(g, km, d, n, int(cnt.sum()))


def fit_degree_exponent(hist: Mapping[int, int], kmin: int | None = None) -> float:
    return fit_degree_tail(hist, kmin).exponent


def bounds_flag(m: float) -> bool:
    return M_MIN < m < M_MAX


def read_prices_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read ``date,close`` (or a simulator ``t,U_T`` dump) into labels and values."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header not in (["date", "close"], ["t", "U_T"]):
            raise ValueError(f"{path}: expected header 'date,close' or 't,U_T', got {','.join(header)}")
        labels, values = [], []
        for row in reader:
            if not row:
                continue
            labels.append(row[0])
            values.append(float(row[1]))
    return labels, np.asarray(values, dtype=float)


def write_ccdf_csv(samples: Sequence[float], path: str | Path) -> None:
    values, frac = ccdf(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "fraction_ge"])
        for v, f in zip(values, frac):
            w.writerow([repr(float(v)), repr(float(f))])


def index_avalanche_sizes(prices: Sequence[float], metric: str = "cum_return", sign: int = -1) -> np.ndarray:
    return extract_avalanches(segment_events(log_returns(prices)), sign, metric)
