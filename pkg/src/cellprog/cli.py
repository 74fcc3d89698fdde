"""Command-line driver: ``cellprog SCENE [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import EXIT_INVALID, RunConfig, explain, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cellprog",
        description="Compile a robot-cell scene file into INFORM (.jbi) and/or RAPID (.mod) programs.",
    )
    p.add_argument("scene", help="scene file (JSON)")
    p.add_argument("--dialect", action="append", choices=("inform", "rapid"),
                   help="output dialect; repeat for both (default: both)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    p.add_argument("--speed", type=float, metavar="PCT", help="override speed_percent")
    p.add_argument("--cycles", type=int, metavar="N", help="override working cycles")
    p.add_argument("--approach", type=float, metavar="MM", help="override approach distance in mm")
    p.add_argument("--motion", choices=("joint", "linear"), help="override default motion for tool targets")
    p.add_argument("--strict", action="store_true", help="treat planning warnings as errors")
    p.add_argument("--explain", action="store_true", help="print the target table instead of writing programs")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.explain:
        return explain(args.scene, sys.stdout, sys.stderr, strict=args.strict)
    try:
        config = RunConfig(
            input_path=args.scene,
            dialects=args.dialect or ("inform", "rapid"),
            output_dir=args.out,
            speed=args.speed,
            cycles=args.cycles,
            approach=args.approach,
            motion=args.motion,
            verbosity=args.verbose,
            strict=args.strict,
        )
    except ValueError as exc:
        print(f"cellprog: error {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(config, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
