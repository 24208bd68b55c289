"""Command-line entry point: ``edgemob {generate,run,sweep,bounds}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import PROFILES, RunConfig
from .errors import EdgeMobError
from .harness import emit, evaluate_summary_bounds, run_experiment, sweep, validate_summary
from .scenario import generate_trace, save_trace

log = logging.getLogger("edgemob")


def _config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig.profile(args.profile)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    return cfg.replace(**overrides) if overrides else cfg


def _parse_values(text):
    values = []
    for item in text.split(","):
        item = item.strip()
        values.append(int(item) if item.lstrip("-").isdigit() else float(item))
    return values


def cmd_generate(args):
    cfg = _config(args)
    seed = cfg.base_seed + args.replication
    trace = generate_trace(cfg.topology(), cfg.constants(), seed, cfg.mobility(), cfg.processes(), cfg.radio())
    out = Path(args.out)
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"trace_seed{seed}.json"
    save_trace(trace, out)
    print(f"wrote {out} ({trace.horizon} periods, sha256 {trace.content_hash()[:16]})")


def _print_aggregates(result):
    agg = result.aggregate()
    print(f"{'policy':<16}{'mean delay':>14}{'total energy':>16}{'budget ok':>11}")
    for p, m in agg.items():
        print(f"{p:<16}{m['mean_delay']['mean']:>14.5f}{m['total_energy']['mean']:>16.4f}"
              f"{m['budget_satisfied']['mean']:>11.2f}")


def cmd_run(args):
    cfg = _config(args)
    result = run_experiment(cfg)
    paths = emit(result, args.out)
    _print_aggregates(result)
    print(f"wrote {len(paths)} files to {args.out}")


def cmd_sweep(args):
    cfg = _config(args)
    values = _parse_values(args.values)
    for value, result in sweep(cfg, args.parameter, values):
        out = Path(args.out) / f"{args.parameter}={value}"
        emit(result, out)
        print(f"== {args.parameter} = {value}")
        _print_aggregates(result)


def cmd_bounds(args):
    path = Path(args.report)
    if path.is_dir():
        path = path / "summary.json"
    with path.open() as fh:
        doc = validate_summary(json.load(fh))
    rows = evaluate_summary_bounds(doc)
    if not rows:
        print("summary has no bound inputs (run with the lookahead policy enabled)")
        return 1
    print(f"{'rep':>4} {'policy':<8}{'metric':<8}{'empirical':>14}{'bound':>14}{'slack':>14}  holds")
    for r in rows:
        print(f"{r['replication']:>4} {r['policy']:<8}{r['metric']:<8}{r['empirical']:>14.5f}"
              f"{r['bound']:>14.5f}{r['slack']:>14.5f}  {r['holds']}")
    return 0 if all(r["holds"] for r in rows) else 3


def build_parser():
    parser = argparse.ArgumentParser(prog="edgemob", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, replications=True):
        p.add_argument("--config", help="run config JSON (overrides --profile)")
        p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
        p.add_argument("--seed", type=int, help="base seed")
        if replications:
            p.add_argument("--replications", type=int)
        p.add_argument("--out", default="results")

    p = sub.add_parser("generate", help="generate one scenario trace")
    common(p, replications=False)
    p.add_argument("--replication", type=int, default=0, help="replication index whose seed to use")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run an experiment")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run one experiment per parameter value")
    common(p)
    p.add_argument("--parameter", required=True, choices=["budget", "K", "V"])
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate bounds on an existing summary.json")
    p.add_argument("report", help="summary.json or the directory containing it")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args) or 0
    except (EdgeMobError, OSError, ValueError) as exc:
        print(f"edgemob: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
