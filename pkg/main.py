"""
Command-line entry point.

    python main.py solve --config run.ini
    python main.py verify --config run.ini --threads 4
    python main.py fit-decay --config run.ini
    python main.py ring --config run.ini --out runs/ring
"""
import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from exterior_hessian.settings import get_settings
from exterior_hessian.components.cli.commands import (
    EXIT_CONFIG,
    cmd_fit_decay,
    cmd_ring,
    cmd_solve,
    cmd_verify,
)

logger = logging.getLogger("exterior_hessian")


def _radii(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated radii, got {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("probe radii must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exterior-hessian",
                                     description="Exterior k-Hessian solver and verification harness")
    parser.add_argument("--log-level", default=None, help="Root logging level (default from settings)")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(name: str, help_text: str, checkpoint: bool = True, threads: bool = True):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="INI run config")
        if checkpoint:
            sub.add_argument("--checkpoint", default=None, help="Checkpoint path (overrides the config)")
        sub.add_argument("--out", default=None, help="Report directory (overrides the config)")
        sub.add_argument("--force", action="store_true", help="Overwrite existing reports")
        if threads:
            sub.add_argument("--threads", type=int, default=None, help="Workers for per-level analysis")
        return sub

    solve = common("solve", "continuation to the limit, checkpoint and diagnostics")
    solve.add_argument("--probe-radii", type=_radii, default=None, help="Comma-separated probe radii")
    common("verify", "boundary inequality and level-set checks of a checkpoint")
    common("fit-decay", "decay exponents of a checkpoint", threads=False)
    common("ring", "bounded-ring family and its ordering", checkpoint=False)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else 0

    settings = get_settings()
    logging.basicConfig(level=(args.log_level or settings.log_level).upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.command == "solve":
        return cmd_solve(args.config, args.checkpoint, args.out, args.force, args.threads, args.probe_radii)
    if args.command == "verify":
        return cmd_verify(args.config, args.checkpoint, args.out, args.force, args.threads)
    if args.command == "fit-decay":
        return cmd_fit_decay(args.config, args.checkpoint, args.out, args.force)
    return cmd_ring(args.config, args.out, args.force, args.threads)


if __name__ == "__main__":
    sys.exit(main())
