import argparse
import sys
from collections.abc import Sequence
from typing import Any

from darts_plus.errors import DartsPlusError
from darts_plus.logs import configure_logging, get_logger
from darts_plus.runner import config as cfg
from darts_plus.runner.experiment import parse_config
from darts_plus.runner.runner import run_command

logger = get_logger("runner.cli")

EXIT_OK, EXIT_FAILED, EXIT_CRASHED = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darts-plus", description="Architecture search with early stopping.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in cfg.COMMANDS:
        sub = commands.add_parser(name)
        sub.add_argument("--config", help="YAML experiment config")
        sub.add_argument("--seed", type=int, help="run seed, overrides the config")
        sub.add_argument("--out", help="run directory, overrides the config")
        if name == cfg.CMD_EVAL:
            sub.add_argument("--genotype", help="genotype JSON to evaluate")
        sub.add_argument("overrides", nargs="*", metavar="key=value")
    return parser


def collect_assignments(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values go into the config as given; paths are never read as YAML scalars."""
    assignments: dict[str, Any] = {"command": args.command}
    if args.seed is not None:
        assignments["seed"] = args.seed
    if args.out is not None:
        assignments["out_dir"] = args.out
    if getattr(args, "genotype", None) is not None:
        assignments["genotype_path"] = args.genotype
    return assignments


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, args.overrides, collect_assignments(args))
        result = run_command(config)
    except DartsPlusError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_FAILED
    except Exception:
        logger.exception(f"{args.command} crashed")
        return EXIT_CRASHED
    logger.info(f"{args.command} done in {result.wall_time:.1f}s, result in {result.artifacts[cfg.RESULT_FILE]}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
