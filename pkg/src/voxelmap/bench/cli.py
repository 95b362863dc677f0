"""``bench`` command line.

    bench scaling|occlusion|voxel-sweep|recall [--config PATH] [--out DIR] [--seed N] [--check]

Exit codes: 0 success, 2 invalid configuration, 3 a check failed under
``--check``.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import RUNNERS, PreconditionError
from .report import write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3

log = logging.getLogger("voxelmap.bench")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Voxel-map query benchmarks.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out", default="bench-out", help="output directory (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--repeats", type=int, default=None, help="override the config repeats")
    parser.add_argument("--check", action="store_true",
                        help="exit with status 3 if any acceptance check fails")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, experiment=args.experiment, seed=args.seed,
                          repeats=args.repeats)
    except ConfigError as exc:
        print(f"bench: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"bench: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s (seed=%d, repeats=%d)", cfg.experiment, cfg.seed, cfg.repeats)
    try:
        result = RUNNERS[cfg.experiment](cfg)
    except PreconditionError as exc:
        print(f"bench: precondition failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"bench: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    written = write_report(result, args.out, figures=not args.no_figures)
    for check in result.checks:
        print(check.line())
    print(f"wrote {', '.join(str(p) for p in written)}")
    if args.check and not result.passed:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
