"""
snls-mix command line entry point
Parses flags, configures logging and dispatches to the experiment runner
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from . import __version__
from .config import DEFAULT_THREADS, LOG_LEVEL
from .experiments import SCENARIOS, SUBCOMMANDS, ConfigError, load_config, make_context, run
from .utils.errors import SnlsMixError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snls-mix",
        description="Simulate the damped stochastic NLS and check its dissipation, coupling and mixing",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="Experiment file with [section] key = value blocks")
    parser.add_argument("--scenario", choices=sorted(SCENARIOS), help="Preset the config file overrides")
    parser.add_argument("--seed", type=int, help="64-bit experiment seed (overrides run.seed)")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"Worker threads (overrides run.threads, env default {DEFAULT_THREADS})")
    parser.add_argument("--out", type=Path, help="Output directory (default: $SNLS_MIX_OUT)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log per-cycle detail")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def configure_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else LOG_LEVEL)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Returns:
        0 when every verdict passed or is inconclusive, 1 on a failed verdict,
        2 on an invalid config
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        logger.error("Seed must fit in 64 bits", seed=args.seed)
        return 2
    try:
        cfg = load_config(args.config, args.scenario)
        ctx = make_context(cfg, args.seed, args.threads, args.out)
        return run(args.subcommand, ctx)
    except ConfigError as exc:
        logger.error(f"Invalid config: {exc}")
        return 2
    except SnlsMixError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
