"""Command-line entry point.

Usage:
    coarsesmith run euclidean_plane --window 16
    coarsesmith run scenario.json --format text
    coarsesmith list
"""
from __future__ import annotations

import argparse
import inspect
import os
import sys

from . import scenarios
from .errors import CoarseSmithError
from .limits import RunOptions, report_json, run_scenario


def _scales(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coarsesmith", description="Coarse Smith theory on finite windows")
    sub = ap.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="run a builtin or JSON scenario")
    run.add_argument("scenario", help="builtin name or path to a scenario JSON file")
    run.add_argument("--prime", type=int, help="prime p of the group action")
    run.add_argument("--field", type=int, help="coefficient field F_q for homology")
    run.add_argument("--window", type=int, help="window radius of builtin scenarios")
    run.add_argument("--levels", type=int, help="number of coarsening levels (grid scenarios)")
    run.add_argument("--max-dim", type=int, help="nerve dimension cap")
    run.add_argument("--scales", type=_scales, help="comma separated scan scales")
    run.add_argument("--format", choices=["json", "text"], default="json")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--oracle", action="store_true", help="enable brute-force cross-checks")
    run.add_argument("--rule", choices=["first", "last"], default="first",
                     help="tie-break rule for refinement projections")
    sub.add_parser("list", help="list builtin scenarios")
    return ap


def load(args):
    name = args.scenario
    if os.path.exists(name):
        if args.window or args.levels:
            print("note: --window/--levels ignored for JSON scenarios", file=sys.stderr)
        return scenarios.load_scenario_file(name)
    if name not in scenarios.BUILTINS:
        raise SystemExit(f"unknown scenario {name!r}; try `coarsesmith list`")
    make = scenarios.BUILTINS[name]
    kw = {}
    if args.window:
        kw["N"] = args.window
    if args.levels:
        if name.startswith("euclidean"):
            kw["num_levels"] = args.levels
        else:
            print(f"note: --levels has no effect on {name}", file=sys.stderr)
    return make(**kw)


def text_report(rep: dict) -> str:
    S = rep["sections"]
    lines = [f"scenario {rep['scenario']}: {rep['points']} points, {rep['frontier_points']} on the frontier"]
    for k, v in S.get("fixed_sets", {}).items():
        lines.append(f"  fixed set [{k}]: {v['verdict']} k0={v['k0']} c0={v['c0']}")
    if "coarsening" in S:
        c = S["coarsening"]
        lines.append(f"  levels {c['sizes']}  R={c['R']}  Lebesgue={c['lebesgue']}  subdivisions={c['subdivisions']}")
    if "homology" in S:
        h = S["homology"]
        lines.append(f"  HC(X) over F_{rep['field']}: {h['table']} ({h['certificate']})")
    if "bounded_fixed_homology" in S:
        b = S["bounded_fixed_homology"]
        lines.append(f"  HC(X^G_bd) over F_{rep['prime']}: {b['estimate']['table']} rho_check={b['rho_check']}")
    if "euler" in S:
        e = S["euler"]
        lines.append(f"  Euler: chi(X)={e['chi_X']} chi(F)={e['chi_fixed']} chi(X/G)={e['chi_quotient']} "
                     f"residual={e['residual']}")
    if "sphere_series" in S:
        t = S["sphere_series"]
        if "stages" in t:
            lines.append("  series: " + ", ".join(f"{'/'.join(s['subgroup'])}->r={s['r']}" for s in t["stages"]))
        else:
            lines.append(f"  sphere check skipped: {t['precondition_failed']}")
    if "centralizer" in S:
        c = S["centralizer"]
        lines.append(f"  centralizer ({c['size']} points) densities {c['densities']}")
    for k in ("identity_failures", "honest_negatives"):
        if rep[k]:
            lines.append(f"  {k.replace('_', ' ')}: {rep[k]}")
    lines.append(f"exit {rep['exit_code']}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "list":
        for name, make in sorted(scenarios.BUILTINS.items()):
            N = inspect.signature(make).parameters["N"].default
            print(f"{name}  (default window {N})")
        return 0
    try:
        sc = load(args)
    except CoarseSmithError as e:
        print(f"error [{e.module}]: {e}", file=sys.stderr)
        return 2
    if args.max_dim:
        sc.max_dim = args.max_dim
    opts = RunOptions(prime=args.prime, field=args.field, max_dim=args.max_dim, scales=args.scales,
                      seed=args.seed, oracle=args.oracle, rule=args.rule)
    rep = run_scenario(sc, opts)
    print(report_json(rep) if args.format == "json" else text_report(rep))
    return rep["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
