"""Experiment driver: run algorithms on graphs, verify against oracles, sweep.

Usage:
  rcastsim run --algo broadcast-cc --gen "gnp(256,0.02)" --s 4 --seeds 0:5
  rcastsim run --algo msf-rcast2 --graph edges.txt --seed 7 --format json-lines
  rcastsim sweep --algo msf-capopt --gen "gnp({n},0.02)" --n-exps 6:12 --seeds 0:2

One record per run: algorithm, n, seed, rounds, total_capacity, max_range,
per_node_bits_max, correct.  Exit codes: 0 all correct, 1 correctness failure,
2 model violation, 3 usage error.  CLIQUE_SIM_ROUND_CAP overrides the engine
round cap.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from .bcc import boruvka_msf_broadcast, broadcast_cc
from .detmsf import msf_capacity_optimal, msf_rcast2
from .engine import SimulationError
from .graph import Graph, generate, oracle_components, oracle_msf, parse_graph
from .randcc import cc_capacity_optimal, cc_logstar

ALGORITHMS = (
    "boruvka-msf",
    "broadcast-cc",
    "msf-rcast2",
    "msf-capopt",
    "cc-logstar",
    "cc-capopt",
)

REQUIRED_RANGE = {
    "boruvka-msf": 1,
    "broadcast-cc": 1,
    "msf-rcast2": 2,
    "msf-capopt": 2,
    "cc-logstar": 2,
    "cc-capopt": 2,
}


@dataclass
class ExperimentSpec:
    algorithm: str
    graph_path: str | None = None
    gen: str | None = None
    seeds: tuple[int, ...] = (0,)
    s: int | None = None
    d: int = 1
    r: int | None = None
    b: int | None = None
    phase_log: bool = False
    round_cap: int | None = None


def parse_seeds(text: str) -> tuple[int, ...]:
    """"0:100" is a half-open range, "1,5,9" an explicit list, "7" one seed."""
    if ":" in text:
        lo, hi = text.split(":")
        return tuple(range(int(lo), int(hi)))
    return tuple(int(p) for p in text.split(","))


def load_graph(spec: ExperimentSpec, seed: int) -> Graph:
    if spec.graph_path:
        with open(spec.graph_path) as fh:
            return parse_graph(fh.read())
    return generate(spec.gen, seed)


def run_one(spec: ExperimentSpec, seed: int) -> tuple[dict, object]:
    g = load_graph(spec, seed)
    kw = dict(seed=seed, r=spec.r, b=spec.b, round_cap=spec.round_cap)
    algo = spec.algorithm
    if algo == "boruvka-msf":
        res = boruvka_msf_broadcast(g, seed=seed, b=spec.b, round_cap=spec.round_cap)
        correct = res.edges == oracle_msf(g)
    elif algo == "broadcast-cc":
        res = broadcast_cc(g, s=spec.s, d=spec.d, **kw)
        correct = res.partition == oracle_components(g)
    elif algo == "msf-rcast2":
        res = msf_rcast2(g, **kw)
        correct = res.edges == oracle_msf(g)
    elif algo == "msf-capopt":
        res = msf_capacity_optimal(g, **kw)
        correct = res.edges == oracle_msf(g)
    elif algo == "cc-logstar":
        res = cc_logstar(g, **kw)
        correct = res.partition == oracle_components(g)
    elif algo == "cc-capopt":
        res = cc_capacity_optimal(g, **kw)
        correct = res.partition == oracle_components(g)
    else:
        raise ValueError(algo)
    record = {"algorithm": algo, "n": g.n, "seed": seed}
    record.update(res.metrics.to_record())
    record["correct"] = bool(correct)
    return record, res


def emit(records: list[dict], fmt: str, out) -> None:
    if fmt == "json-lines":
        for rec in records:
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        return
    if not records:
        return
    cols = list(records[0].keys())
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=cols)
        writer.writeheader()
        writer.writerows(records)
        return
    widths = {c: max(len(c), max(len(str(r[c])) for r in records)) for c in cols}
    out.write("  ".join(c.ljust(widths[c]) for c in cols) + "\n")
    for rec in records:
        out.write("  ".join(str(rec[c]).ljust(widths[c]) for c in cols) + "\n")


def emit_phase_logs(res, out) -> None:
    phases = getattr(res, "phases", None)
    if not phases:
        return
    for p in phases:
        entry = {"phase": getattr(p, "phase", None)}
        for key in ("kind", "x", "mu", "mu_prime", "s_min_known", "active_start",
                    "active_end", "decode_success", "beta_announce"):
            if hasattr(p, key):
                entry[key] = getattr(p, key)
        out.write("# " + json.dumps(entry, sort_keys=True) + "\n")


def _usage_error(msg: str) -> SystemExit:
    print(f"error: {msg}", file=sys.stderr)
    return SystemExit(3)


def make_spec(args) -> ExperimentSpec:
    if bool(args.graph) == bool(args.gen):
        raise _usage_error("exactly one of --graph/--gen is required")
    round_cap = None
    if os.environ.get("CLIQUE_SIM_ROUND_CAP"):
        round_cap = int(os.environ["CLIQUE_SIM_ROUND_CAP"])
    spec = ExperimentSpec(
        algorithm=args.algo,
        graph_path=args.graph,
        gen=args.gen,
        seeds=parse_seeds(args.seeds) if args.seeds else (args.seed,),
        s=args.s,
        d=args.d,
        r=args.r,
        b=args.b,
        phase_log=args.phase_log,
        round_cap=round_cap,
    )
    if spec.r is not None and spec.r != REQUIRED_RANGE[spec.algorithm]:
        warnings.warn(
            f"{spec.algorithm} normally runs with range {REQUIRED_RANGE[spec.algorithm]}; "
            f"--r {spec.r} overrides the model constraint"
        )
    return spec


def cmd_run(args) -> int:
    spec = make_spec(args)
    records = []
    worst = 0
    for seed in spec.seeds:
        try:
            record, res = run_one(spec, seed)
        except SimulationError as err:
            print(f"model violation: {err}", file=sys.stderr)
            return 2
        records.append(record)
        if not record["correct"]:
            worst = 1
            print(
                f"oracle mismatch: {spec.algorithm} n={record['n']} seed={seed}",
                file=sys.stderr,
            )
        if spec.phase_log:
            emit_phase_logs(res, sys.stdout)
    emit(records, args.format, sys.stdout)
    return worst


def cmd_sweep(args) -> int:
    if not args.gen or "{n}" not in args.gen:
        raise _usage_error("sweep needs --gen containing the {n} placeholder")
    exps = parse_seeds(args.n_exps) if args.n_exps else ()
    records = []
    worst = 0
    for exp in exps:
        n = 2**exp
        for seed in parse_seeds(args.seeds or "0:1"):
            sub = argparse.Namespace(**vars(args))
            sub.gen = args.gen.format(n=n)
            sub.graph = None
            sub.seeds = None
            sub.seed = seed
            spec = make_spec(sub)
            try:
                record, res = run_one(spec, seed)
            except SimulationError as err:
                print(f"model violation: {err}", file=sys.stderr)
                return 2
            record["log2n"] = exp
            record["capacity_per_log_n"] = round(record["total_capacity"] / max(1, exp), 3)
            records.append(record)
            worst |= 0 if record["correct"] else 1
    records.sort(key=lambda r: (r["n"], r["seed"]))
    # per-n medians for the scaling fits
    by_n: dict[int, list[dict]] = {}
    for rec in records:
        by_n.setdefault(rec["n"], []).append(rec)
    aggregates = []
    for n, group in sorted(by_n.items()):
        aggregates.append(
            {
                "algorithm": group[0]["algorithm"],
                "n": n,
                "seed": "median",
                "rounds": int(np.median([r["rounds"] for r in group])),
                "total_capacity": int(np.median([r["total_capacity"] for r in group])),
                "max_range": max(r["max_range"] for r in group),
                "per_node_bits_max": int(np.median([r["per_node_bits_max"] for r in group])),
                "beta_max": max(r["beta_max"] for r in group),
                "correct": all(r["correct"] for r in group),
                "log2n": int(np.log2(n)),
                "capacity_per_log_n": round(
                    float(np.median([r["capacity_per_log_n"] for r in group])), 3
                ),
            }
        )
    emit(records + aggregates, args.format, sys.stdout)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcastsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--algo", required=True, choices=ALGORITHMS)
        p.add_argument("--graph", help="edge-list file path")
        p.add_argument("--gen", help="generator descriptor, e.g. gnp(256,0.02)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--seeds", help="range lo:hi or comma list")
        p.add_argument("--s", type=int, help="degree threshold (broadcast-cc)")
        p.add_argument("--d", type=int, default=1, help="bandwidth multiplier (broadcast-cc)")
        p.add_argument("--r", type=int, help="override model range (warns)")
        p.add_argument("--b", type=int, help="override bandwidth in bits (warns)")
        p.add_argument("--phase-log", action="store_true")
        p.add_argument(
            "--format", choices=("table", "json-lines", "csv"), default="table"
        )
        if name == "sweep":
            p.add_argument("--n-exps", required=True, help="log2(n) range lo:hi")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except SystemExit as ex:
        raise
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
