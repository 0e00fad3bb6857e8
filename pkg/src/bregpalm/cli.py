"""The ``bench`` command line: run a benchmark suite for one problem kind.

    bench <nmf|sigrec|qfp> [--config FILE] [--seed N] [--variant NAME]
                           [--out DIR] [--override-theory] [--no-plot]
                           [--print-config]

Without a config file the suite runs with the reference defaults for the
chosen kind. Exit code 0 means every run converged; 1 means at least one run
stopped for another reason (iteration cap, divergence); 2 means a solver
fault or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import run_suite
from .config import KINDS, default_config, emit_config, parse_config, BenchConfig
from .errors import BregPalmError

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Run inertial Bregman alternating-minimization benchmark suites.",
    )
    parser.add_argument("kind", choices=KINDS, help="problem family to benchmark")
    parser.add_argument("--config", help="config file (key-value sections)")
    parser.add_argument("--seed", type=int, help="override the base seed")
    parser.add_argument("--variant", help="run only this solver variant")
    parser.add_argument("--out", help="output directory for traces and summaries")
    parser.add_argument(
        "--override-theory",
        action="store_true",
        help="run schedules that violate the admissibility margin",
    )
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print the fully resolved configuration and exit",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config, "r", encoding="ascii") as fh:
                cfg = parse_config(fh.read()).section(args.kind)
        else:
            cfg = default_config(args.kind)

        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.variant is not None:
            overrides["variants"] = (args.variant.strip().lower(),)
        if args.out is not None:
            overrides["out"] = args.out
        if args.override_theory:
            overrides["override_theory"] = True
        if args.no_plot:
            overrides["plot"] = False
        if overrides:
            cfg = cfg.replace(**overrides)

        if args.print_config:
            full = BenchConfig({k: (cfg if k == args.kind else default_config(k)) for k in KINDS})
            print(emit_config(full), end="")
            return 0

        result = run_suite(cfg)
    except (BregPalmError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2

    converged = sum(r.trace.reason == "converged" for r in result.runs)
    print(f"{cfg.kind}: {len(result.runs)} runs, {converged} converged")
    for r in result.runs:
        if r.trace.reason != "converged":
            print(f"  {r.label} seed={r.seed}: {r.trace.reason}"
                  + (f" ({r.trace.fault})" if r.trace.fault else ""))
    print(f"summary: {result.summary_path}")
    print(f"series:  {result.series_path}")
    for p in result.figure_paths:
        print(f"figure:  {p}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
