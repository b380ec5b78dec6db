"""Command-line entry point: ``hermite-nmg solve --config case.yaml``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, NonConvergence

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2

log = logging.getLogger("hermite_nmg")


def _levels(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("levels must be 'auto' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("levels must be 'auto' or a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hermite-nmg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="solve a cavity configuration to steady state")
    solve.add_argument("--config", required=True, help="YAML configuration file")
    solve.add_argument("--solver", choices=["euler", "fs", "nmg"])
    solve.add_argument("--order", type=int, choices=[1, 2], help="spatial order")
    solve.add_argument("--levels", type=_levels, help="'auto' or the number of grid levels")
    solve.add_argument("--threads", type=int, help="worker count")
    solve.add_argument("--output", help="output directory")
    solve.add_argument("--max-iter", type=int, help="outer iteration cap")
    return parser


def _solve(args) -> int:
    # deferred so that --help does not pay for the numerical imports
    from .scenarios import config_from_dict, load_config, run

    try:
        cfg = load_config(args.config)
        overrides = {
            "solver": args.solver,
            "order": args.order,
            "levels": args.levels,
            "threads": args.threads,
            "max_iter": args.max_iter,
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if overrides:
            cfg = config_from_dict({**cfg.model_dump(), **overrides})
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run(cfg, args.output)
    except NonConvergence as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    rep = result.report
    print(
        f"converged: solver={rep.solver} levels={rep.levels} iterations={rep.iterations} "
        f"ratio={rep.final_ratio:.3e} seconds={rep.seconds:.2f} -> {result.output_dir}"
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "solve":
        return _solve(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
