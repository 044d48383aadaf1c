"""
Main command-line entry point.
Combines the analytic, map and percolation commands.

    python -m app.main constants --alpha 0.8
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app import __version__
from app.commands import HANDLERS, ROUTERS
from app.commands.common import CommandResult
from app.config import get_settings
from app.errors import DomainError
from app.models import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_PARTIAL = 3

# argparse dests that are not ExperimentConfig fields
_CLI_ONLY = {"log_level"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Master seed")
    common.add_argument("--replicas", type=int, help="Independent replicas")
    common.add_argument("--workers", type=int, help="Worker processes (default: LAB_WORKERS or CPU count)")
    common.add_argument("--output", help="Data file path (default: <output_dir>/<subcommand>-s<seed>.csv)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--i-max", type=int, dest="i_max", help="Cap on swallowed boundary length")
    common.add_argument("--max-steps", type=int, dest="max_steps")
    common.add_argument("--max-vertices", type=int, dest="max_vertices")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], dest="log_level")

    parser = argparse.ArgumentParser(prog="lab", description="Domain Markov half-planar triangulation lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for router in ROUTERS:
        router.add_parsers(subparsers, common)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Flags win over settings; settings win over model defaults"""
    settings = get_settings()
    values = {k: v for k, v in vars(args).items() if v is not None and k not in _CLI_ONLY}
    values.setdefault("workers", settings.workers)
    values.setdefault("i_max", settings.i_max)
    values.setdefault("max_steps", settings.max_steps)
    values.setdefault("max_vertices", settings.max_vertices)
    return ExperimentConfig(**values)


def run(config: ExperimentConfig) -> CommandResult:
    """Dispatch a validated config to its command"""
    logger.debug("running %s with %s", config.subcommand, config.echo())
    return HANDLERS[config.subcommand](config)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help / --version exit 0, usage errors exit 2
        return int(exc.code or 0)

    try:
        level = args.log_level or get_settings().log_level
        logging.basicConfig(level=getattr(logging, level),
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        config = config_from_args(args)
        result = run(config)
    except (DomainError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    if result.stdout is not None:
        print(result.stdout)
    elif result.data_path is not None:
        print(json.dumps({"data": str(result.data_path), "partial": result.partial}))
    if result.partial:
        logger.warning("output is partial: a resource cap was hit")
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
