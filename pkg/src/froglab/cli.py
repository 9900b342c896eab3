"""Command-line entry point.

``froglab <experiment> [--config FILE] [--d ...]`` runs a named experiment
and exits with status 0 iff every check passes.  ``froglab simulate``
runs a single frog model and exports its trace.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine as E
from .experiments import EXPERIMENTS, ConfigError, parse_config, run_experiment
from .tree import TreeKind

_FLAGS = (
    ("--d", int, "branching number"),
    ("--mu", float, "mean number of sleeping frogs per vertex"),
    ("--n", int, "sequence length, window size or path length"),
    ("--T", int, "time horizon"),
    ("--trials", int, "number of independent trials or samples"),
    ("--seed", int, "master seed"),
    ("--confidence", float, "confidence level of exact binomial bounds"),
    ("--gamma", float, "exponent for the lower bound on lambda"),
    ("--beta", float, "passage-time decay rate or zeta exponent"),
    ("--alpha", float, "Poisson intensity to dominate"),
    ("--sigmas", float, "tolerance in standard errors"),
    ("--workers", int, "worker processes for independent trials"),
)


def _experiment_parser(sub, name: str) -> None:
    p = sub.add_parser(name, help=f"run the {name} experiment")
    p.add_argument("--config", help="JSON file with flat parameter keys; flags override it")
    for flag, typ, text in _FLAGS:
        p.add_argument(flag, type=typ, default=None, help=text)
    p.add_argument("--out", default=None, help="directory for report.json and series.csv")
    p.add_argument("--quiet", action="store_true", help="print only the overall verdict")


def _simulate_parser(sub) -> None:
    p = sub.add_parser("simulate", help="run one frog model and export its trace")
    p.add_argument("--variant", choices=[v.value for v in E.Variant], default="standard")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--height", type=int, default=None, help="use the finite tree of this height")
    init = p.add_mutually_exclusive_group()
    init.add_argument("--mu", type=float, default=None, help="Poisson sleepers with this mean")
    init.add_argument("--fixed", type=int, default=None, help="exactly this many sleepers per vertex")
    p.add_argument("--T", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observe-depth", type=int, default=None)
    p.add_argument("--root-reflect", action="store_true")
    p.add_argument("--engine", choices=["count", "agent"], default="count")
    p.add_argument("--frog-cap", type=int, default=10**8)
    p.add_argument("--out", default=None, help="directory for series.csv, visits.csv and summary.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="froglab", description="Frog model experiments on d-ary trees.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _experiment_parser(sub, name)
    _simulate_parser(sub)
    return parser


def _run_experiment(args) -> int:
    overrides = {flag[2:]: getattr(args, flag[2:]) for flag, _, _ in _FLAGS}
    overrides["experiment"] = args.command
    overrides["out"] = args.out
    try:
        cfg = parse_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"froglab: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(cfg)
    if not args.quiet:
        for r in report.records:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: statistic={r.statistic:.6g} bound={r.bound:.6g} margin={r.margin:.3g}")
        for note in report.notes:
            print(f"note: {note}")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {cfg.experiment} ({len(report.records)} checks, {report.runtime:.1f}s)")
    if args.out:
        print(f"wrote {Path(args.out) / 'report.json'}")
    return 0 if report.passed else 1


def _simulate(args) -> int:
    d = args.d
    tree = TreeKind.finite(d, args.height) if args.height else TreeKind.rooted(d)
    if args.fixed is not None:
        init = E.InitLaw.fixed(args.fixed)
    else:
        init = E.InitLaw.poisson(args.mu if args.mu is not None else 1.0)
    try:
        cfg = E.SimConfig(
            tree,
            E.Variant(args.variant),
            init,
            args.T,
            seed=args.seed,
            observe_depth=args.observe_depth,
            root_reflect=args.root_reflect,
            engine=args.engine,
            frog_cap=args.frog_cap,
        )
    except ValueError as exc:
        print(f"froglab: {exc}", file=sys.stderr)
        return 2
    status = 0
    try:
        trace = E.run_any(cfg)
    except E.TruncationError as exc:
        print(f"froglab: truncated: {exc}", file=sys.stderr)
        trace, status = exc.trace, 1
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        trace.write_series_csv(out / "series.csv")
        trace.write_visits_csv(out / "visits.csv")
        (out / "summary.json").write_text(trace.summary_json())
    print(json.dumps(trace.summary(), indent=2))
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return _simulate(args)
    return _run_experiment(args)


if __name__ == "__main__":
    sys.exit(main())
