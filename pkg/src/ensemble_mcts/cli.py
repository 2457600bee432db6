"""Command-line interface.

Subcommands:

* ``run``       -- execute a config: run --config path [--seed N] [--out DIR]
* ``diversity`` -- k-distinct-action histogram from an events file
* ``tokens``    -- token totals per episode and per agent
* ``sweep``     -- rerun a config across values of alpha / n / K / uct_c
* ``theorem``   -- expected-error report for an error-indicator matrix
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import ensemble_error
from .harness import (
    diversity_report,
    load_run_config_file,
    run_experiment,
    sweep,
    token_report,
)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_run_config_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    out = run_experiment(cfg)
    with open(out / "summary.json", "r", encoding="utf-8") as handle:
        print(handle.read())
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _cmd_diversity(args: argparse.Namespace) -> int:
    histogram = diversity_report(args.events)
    print(
        json.dumps(
            {
                "expansions": histogram.total_expansions,
                "counts": histogram.to_json(),
            },
            indent=2,
        )
    )
    return 0


def _cmd_tokens(args: argparse.Namespace) -> int:
    print(json.dumps(token_report(args.events), indent=2))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_run_config_file(args.config)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    values = []
    for raw in args.values.split(","):
        raw = raw.strip()
        if not raw:
            continue
        values.append(int(raw) if args.param in ("n", "K") else float(raw))
    csv_path = sweep(cfg, args.param, values)
    with open(csv_path, "r", encoding="utf-8") as handle:
        print(handle.read(), end="")
    print(f"wrote {csv_path}", file=sys.stderr)
    return 0


def _cmd_theorem(args: argparse.Namespace) -> int:
    with open(args.matrix, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    matrix = ensemble_error.ErrorMatrix.create(e=doc["errors"], p=doc.get("p"))
    print(json.dumps(ensemble_error.report(matrix, args.trials, args.seed), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensemble-mcts",
        description="Heterogeneous-agent MCTS planning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_div = sub.add_parser("diversity", help="branch-diversity histogram")
    p_div.add_argument("--events", required=True)
    p_div.set_defaults(func=_cmd_diversity)

    p_tok = sub.add_parser("tokens", help="token consumption report")
    p_tok.add_argument("--events", required=True)
    p_tok.set_defaults(func=_cmd_tokens)

    p_sweep = sub.add_parser("sweep", help="parameter sweep over a config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, choices=["alpha", "n", "K", "uct_c"])
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_thm = sub.add_parser("theorem", help="ensemble expected-error report")
    p_thm.add_argument("--matrix", required=True, help="JSON file with errors and p")
    p_thm.add_argument("--trials", type=int, default=100_000)
    p_thm.add_argument("--seed", type=int, default=0)
    p_thm.set_defaults(func=_cmd_theorem)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
