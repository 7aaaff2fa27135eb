"""Compare raising c_th at constant system size with raising it along constant business level.

Usage: python3 scripts/banking_paths.py --ref-cth -0.71 --target-cth -0.69 --L 2000 --out paths/
"""

import argparse
import sys
from pathlib import Path

from econosim.banking import (
    NoSolution,
    banking_base,
    constant_L_path,
    constant_omega_path,
    run_scenario,
    write_isoline_csv,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ref-cth", type=float, default=-0.71)
    ap.add_argument("--target-cth", type=float, default=-0.69)
    ap.add_argument("--L", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--replicas", type=int, default=1)
    ap.add_argument("--out", default="banking_paths")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = banking_base(steps=args.steps)

    ref = run_scenario(args.ref_cth, args.L, base, args.replicas)
    print(f"reference: c_th={ref.c_th} L={ref.L} Omega={ref.omega_level:.4f} m={ref.m:.3f}", flush=True)
    fixed_L = constant_L_path(args.target_cth, ref, base, args.replicas)
    print(f"constant L: Omega={fixed_L.omega_level:.4f} m={fixed_L.m:.3f}", flush=True)
    write_isoline_csv([ref, fixed_L], out / "constant_L.csv", "constant_L")

    trace = []
    try:
        matched = constant_omega_path(args.target_cth, ref, base, replicas=args.replicas, trace=trace)
        print(f"constant Omega: L={matched.L} Omega={matched.omega_level:.4f} m={matched.m:.3f}")
        write_isoline_csv([ref, matched], out / "constant_omega.csv", "constant_omega")
    except NoSolution as exc:
        print(f"constant Omega: {exc}")
    write_isoline_csv(trace, out / "constant_omega_trace.csv", "search")
    return 0


if __name__ == "__main__":
    sys.exit(main())
