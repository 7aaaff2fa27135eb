"""Command-line entry point: ``econosim {simulate,analyze,critical,sweep,geometry}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .banking import (
    NoSolution,
    banking_base,
    constant_omega_path,
    run_scenario,
    sweep,
    write_isoline_csv,
)
from .config import ConfigError, SimConfig, load_config
from .criticality import DomainError, bounds_check, critical_point
from .economy_graph import read_edges_csv, write_edges_csv, write_histogram_csv
from .geometry import DisconnectedInputError, fractal_dimensions, write_geometry_json
from .tail_stats import (
    InsufficientTailError,
    NonPositivePriceError,
    extract_avalanches,
    fit_degree_tail,
    fit_tail_exponent,
    log_returns,
    read_prices_csv,
    segment_events,
    write_ccdf_csv,
)
from .trade_dynamics import locate_critical_threshold, run

EXIT_OK, EXIT_BAD_INPUT, EXIT_INSUFFICIENT = 0, 2, 3
DEFAULT_OUT = "econosim_out"


class BadInput(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict[str, Any]
    seed: int | None
    artifacts: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__
    notes: dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(_finite(self.__dict__), indent=2, default=_json_default) + "\n")
        return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _write_json(path: Path, data: Any) -> None:
    # json emits the shortest round-trip repr for floats; non-finite become null
    path.write_text(json.dumps(_finite(data), indent=2, default=_json_default) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("ECONOSIM_OUT") or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_file(path: str | None) -> Path:
    if path is None:
        raise BadInput("no input file given")
    p = Path(path)
    if not p.is_file():
        raise BadInput(f"input file not found: {p}")
    return p


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of b) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9)) + 1
            return [round(a + i * step, 12) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise BadInput(f"bad range {text!r}; expected a:b:step or a comma list") from exc


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise BadInput(f"bad integer list {text!r}") from exc


def _sim_config(args, base: SimConfig | None = None) -> SimConfig:
    overrides = {
        "seed": args.seed,
        "c_th": getattr(args, "cth_value", None),
        "n": getattr(args, "n", None),
        "steps": getattr(args, "steps", None),
        "turnover_mode": getattr(args, "turnover_mode", None),
    }
    if getattr(args, "config", None):
        return load_config(_require_file(args.config), **overrides)
    return (base or SimConfig()).with_overrides(**overrides)


def _write_series(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v) for v in row])


def _index_fit(prices: np.ndarray, sign: int, metric: str, xmin: float | None):
    sizes = extract_avalanches(segment_events(log_returns(prices)), sign, metric)
    return sizes, fit_tail_exponent(sizes, xmin=xmin, discrete=metric == "run_length")


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    out = _out_dir(args)
    notes: dict[str, Any] = {}
    if args.locate_critical:
        search = locate_critical_threshold(cfg)
        notes["critical_search"] = {"c_th": search.c_th, "bracket": search.bracket, "probes": search.probes}
        cfg = cfg.with_overrides(c_th=search.c_th)
        res = search.output
    else:
        res = run(cfg)
    artifacts = []

    t = np.arange(res.u_total.size)
    _write_series(out / "u_total.csv", ["t", "U_T"], [t, res.u_total])
    _write_series(out / "returns.csv", ["t", "return"], [t[1:], res.returns])
    with open(out / "avalanches.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "agents_lost", "links_destroyed"])
        for a in res.avalanches:
            w.writerow([a.t, a.agents_lost, a.links_destroyed])
    write_histogram_csv(res.hist_in, out / "hist_in.csv")
    write_histogram_csv(res.hist_out, out / "hist_out.csv")
    artifacts += ["u_total.csv", "returns.csv", "avalanches.csv", "hist_in.csv", "hist_out.csv"]
    if res.network is not None:
        write_edges_csv(res.network, out / "edges.csv")
        artifacts.append("edges.csv")

    status = EXIT_OK
    sizes = res.links_destroyed[res.links_destroyed > 0]
    write_ccdf_csv(sizes, out / "ccdf.csv")
    artifacts.append("ccdf.csv")
    summary: dict[str, Any] = {
        "n_avalanches": len(res.avalanches),
        "secondary_per_primary": res.secondary_per_primary(),
    }
    try:
        summary["avalanche_fit"] = fit_tail_exponent(sizes, discrete=True).to_dict()
    except InsufficientTailError as exc:
        summary["avalanche_fit"] = None
        notes["avalanche_fit"] = str(exc)
        status = EXIT_INSUFFICIENT
    try:
        g = fit_degree_tail(res.hist_in)
        summary["degree_fit"] = {
            "gamma": g.exponent, "kmin": g.xmin, "ks_stat": g.ks_stat, "n_tail": g.n_tail,
            **bounds_check(gamma=g.exponent),
        }
        summary["predicted_m"] = 1.5 * g.exponent - 1.0
    except InsufficientTailError as exc:
        summary["degree_fit"] = None
        notes["degree_fit"] = str(exc)
    if np.all(res.u_total > 0):
        try:
            summary["index_fit"] = _index_fit(res.u_total, -1, "cum_return", None)[1].to_dict()
        except InsufficientTailError as exc:
            summary["index_fit"] = None
            notes["index_fit"] = str(exc)
    else:
        summary["index_fit"] = None
        notes["index_fit"] = "U_T not strictly positive; log returns undefined"
    _write_json(out / "tailfit.json", summary)
    artifacts.append("tailfit.json")

    manifest = RunManifest("simulate", list(args.argv), cfg.to_dict(), cfg.seed, artifacts, notes=notes)
    manifest.wall_time = time.perf_counter() - args.t0
    manifest.write(out)
    return status


def cmd_analyze(args) -> int:
    path = _require_file(args.prices)
    out = _out_dir(args)
    try:
        _, prices = read_prices_csv(path)
        sizes, fit = _index_fit(prices, -1, args.size_metric, args.xmin)
    except NonPositivePriceError as exc:
        raise BadInput(f"{path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, InsufficientTailError):
            raise
        raise BadInput(f"{path}: {exc}") from exc
    write_ccdf_csv(sizes, out / "ccdf.csv")
    _write_json(out / "tailfit.json", fit.to_dict())
    cfg = {"prices": str(path), "size_metric": args.size_metric, "xmin": args.xmin}
    manifest = RunManifest("analyze", list(args.argv), cfg, None, ["ccdf.csv", "tailfit.json"])
    manifest.wall_time = time.perf_counter() - args.t0
    manifest.write(out)
    print(json.dumps(_finite(fit.to_dict())))
    return EXIT_OK


def cmd_critical(args) -> int:
    try:
        cp = critical_point(args.gamma, args.q)
    except DomainError as exc:
        raise BadInput(str(exc)) from exc
    print(json.dumps(cp.to_dict()))
    if args.out:
        out = _out_dir(args)
        _write_json(out / "critical.json", cp.to_dict())
        RunManifest("critical", list(args.argv), {"gamma": args.gamma, "q": args.q}, None,
                    ["critical.json"], time.perf_counter() - args.t0).write(out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _sim_config(args, banking_base())
    c_grid = parse_range(args.cth)
    L_grid = _parse_ints(args.L)
    if not c_grid or not L_grid:
        raise BadInput("--cth and --L must be non-empty")
    if min(L_grid) < 100:
        raise BadInput("every L must be >= 100")
    out = _out_dir(args)
    artifacts = []
    if args.mode == "constant_L":
        surface = sweep(c_grid, L_grid, base, workers=args.parallel)
        surface.write_csv(out / "sweep.csv")
        artifacts.append("sweep.csv")
    else:
        reference = run_scenario(c_grid[0], L_grid[0], base)
        path = [reference]
        for c in c_grid[1:]:
            try:
                path.append(constant_omega_path(c, reference, base))
            except NoSolution as exc:
                print(f"c_th={c}: {exc}", file=sys.stderr)
                break
        write_isoline_csv(path, out / "isoline.csv", "constant_omega")
        artifacts.append("isoline.csv")
    manifest = RunManifest("sweep", list(args.argv), base.to_dict(), base.seed, artifacts,
                           notes={"mode": args.mode, "c_grid": c_grid, "L_grid": L_grid,
                                  "length_matched_steps": base.steps, "warmup": base.warmup_steps})
    manifest.wall_time = time.perf_counter() - args.t0
    manifest.write(out)
    return EXIT_OK


def cmd_geometry(args) -> int:
    if args.network:
        net = read_edges_csv(_require_file(args.network))
        cfg = {"network": args.network}
        seed = args.seed if args.seed is not None else 0
    else:
        sim_cfg = _sim_config(args)
        net = run(sim_cfg).network
        cfg = sim_cfg.to_dict()
        seed = sim_cfg.seed
    out = _out_dir(args)
    try:
        est = fractal_dimensions(net, ell=args.ell, rng=seed, method=args.method)
    except DisconnectedInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    write_geometry_json(est, out / "geometry.json")
    RunManifest("geometry", list(args.argv), cfg, seed, ["geometry.json"],
                time.perf_counter() - args.t0).write(out)
    print(json.dumps(_finite(est.to_dict()), default=_json_default))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econosim", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="key = value or JSON config file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (default: $ECONOSIM_OUT or ./econosim_out)")

    p = sub.add_parser("simulate", help="run the trade model and fit its tails")
    common(p)
    p.add_argument("--cth", dest="cth_value", type=float, help="collapse threshold c_th")
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--turnover-mode", choices=("total", "in_only"))
    p.add_argument("--locate-critical", action="store_true",
                   help="bisect c_th for one secondary collapse per avalanche before recording")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="tail fit of index avalanches from a price series")
    p.add_argument("prices", help="CSV with header date,close (or t,U_T)")
    common(p, config=False)
    p.add_argument("--xmin", type=float)
    p.add_argument("--size-metric", choices=("cum_return", "run_length"), default="cum_return")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("critical", help="critical leverage for a degree exponent")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("sweep", help="banking scenarios over c_th and system size")
    common(p)
    p.add_argument("--cth", required=True, help="a:b:step or comma list of c_th values")
    p.add_argument("--L", required=True, help="comma list of system sizes")
    p.add_argument("--mode", choices=("constant_L", "constant_omega"), default="constant_L")
    p.add_argument("--parallel", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("geometry", help="box-covering dimensions of a network")
    common(p)
    p.add_argument("--network", help="edge list CSV (producer,consumer)")
    p.add_argument("--ell", type=int, choices=(1, 2), default=2)
    p.add_argument("--method", choices=("links", "hub"), default="links")
    p.add_argument("--cth", dest="cth_value", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--turnover-mode", choices=("total", "in_only"))
    p.set_defaults(func=cmd_geometry)
    return parser


VALUE_FLAGS = ("--cth",)
NEGATIVE = re.compile(r"-[0-9.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--cth -0.72:-0.7:0.02`` into ``--cth=-0.72:-0.7:0.02`` for argparse."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_negative_values(argv))
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    args.argv = argv
    args.t0 = time.perf_counter()
    try:
        return args.func(args)
    except (BadInput, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except InsufficientTailError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
