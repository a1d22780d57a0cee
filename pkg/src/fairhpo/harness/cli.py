"""Command line entry point: ``fairhpo <command> ...``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..tuners import TunerError, bracket_schedule
from .analysis import PLOT_KINDS, emit_plot_data, frontier_trials, rung_pareto_density
from .config import ConfigError, load_config
from .experiment import METRICS, compare_runs, read_log, read_summary, run_experiment


def _cmd_run(args):
    cfg = load_config(args.config)
    baseline = read_summary(args.baseline) if args.baseline else None
    summary = run_experiment(cfg, baseline)
    agg = summary["aggregate"]
    print(f"{cfg.name}: {agg['n_ok']} seeds ok, {agg['n_failed']} failed -> {cfg.run_dir}")
    for k in METRICS:
        if agg[f"mean_{k}"] is not None:
            print(f"  mean {k}: {agg[f'mean_{k}']:.4f}")
    return 0 if agg["n_failed"] == 0 else 2


def _cmd_validate(args):
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({cfg.tuner}, fairness={cfg.fairness}, {len(cfg.seeds)} seeds)")
    return 0


def _cmd_schedule(args):
    print(bracket_schedule(args.max_budget, args.eta).table())
    return 0


def _cmd_pareto(args):
    for path in args.logs:
        trials = read_log(path)
        print(f"# {path}")
        print("trial_id,budget,accuracy,fairness")
        for t in frontier_trials(trials):
            print(f"{t.trial_id},{t.budget:g},{t.accuracy:.6f},{t.fairness:.6f}")
        if trials and all(t.bracket >= 0 for t in trials):
            print("bracket,rung,density")
            for (b, r), d in rung_pareto_density(trials).items():
                print(f"{b},{r},{d:.6f}")
    return 0


def _cmd_compare(args):
    d, p = compare_runs(read_summary(args.summary_a), read_summary(args.summary_b), args.metric)
    print(json.dumps({"metric": args.metric, "D": d, "p": p}))
    return 0


def _cmd_plot_data(args):
    logs = {Path(p): read_log(p) for p in args.logs}
    n = emit_plot_data(logs, args.kind, args.out)
    print(f"wrote {n} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairhpo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--baseline", help="summary.json to KS-test against")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check an experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("schedule", help="print the Hyperband bracket table")
    p.add_argument("--max-budget", type=float, default=100)
    p.add_argument("--eta", type=int, default=3)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("pareto", help="print frontier and rung densities of trial logs")
    p.add_argument("logs", nargs="+")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("compare", help="KS test between two run summaries")
    p.add_argument("summary_a")
    p.add_argument("summary_b")
    p.add_argument("--metric", choices=METRICS, default="validation_fairness")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("plot-data", help="write plot-ready CSV from trial logs")
    p.add_argument("logs", nargs="+")
    p.add_argument("--kind", choices=PLOT_KINDS, default="scatter")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TunerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
