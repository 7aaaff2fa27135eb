"""Scan c_th and report avalanche statistics on each side of the critical point.

Usage: python3 scripts/critical_scan.py --cth=-0.6:-0.45:0.01 --steps 200000 --out scan.csv
"""

import argparse
import csv
import sys

import numpy as np
from scipy import stats

from econosim.cli import parse_range
from econosim.config import SimConfig
from econosim.criticality import exponent_map
from econosim.tail_stats import InsufficientTailError, fit_degree_tail, fit_tail_exponent
from econosim.trade_dynamics import run


def scan_row(cfg: SimConfig) -> dict:
    out = run(cfg, keep_network=False)
    row = {"c_th": cfg.c_th, "secondary_per_primary": out.secondary_per_primary(),
           "n_avalanches": len(out.avalanches), "edges_start": int(out.n_edges[0]),
           "edges_end": int(out.n_edges[-1])}
    k = out.links_destroyed[out.links_destroyed > 0]
    try:
        row["m"] = fit_tail_exponent(k, discrete=True).exponent
    except InsufficientTailError:
        row["m"] = float("nan")
    row["gamma_in"] = fit_degree_tail(out.hist_in).exponent
    row["predicted_m"] = exponent_map(row["gamma_in"])
    r = out.returns[np.isfinite(out.returns)]
    row["excess_kurtosis"] = float(stats.kurtosis(r)) if r.size > 3 else float("nan")
    return row


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cth", default="-0.6:-0.45:0.01")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--turnover-mode", choices=("total", "in_only"), default="total")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="critical_scan.csv")
    args = ap.parse_args(argv)
    base = SimConfig(n=args.n, steps=args.steps, turnover_mode=args.turnover_mode, seed=args.seed)
    rows = []
    for c in parse_range(args.cth):
        rows.append(scan_row(base.with_overrides(c_th=c)))
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in rows[-1].items()),
              flush=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
