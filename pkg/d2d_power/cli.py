"""Command line entry point running an experiment campaign from a configuration file"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from d2d_power.campaign import run_campaign
from d2d_power.config import ExperimentConfig, parse_config
from d2d_power.errors import ConfigurationError
from d2d_power.types import ExperimentMode

logger = logging.getLogger(__name__)

EXIT_SUCCESS: int = 0
EXIT_CONFIGURATION: int = 1
EXIT_RUNTIME: int = 2
EXIT_PARTIAL_FAILURE: int = 3

LOG_LEVELS: tuple[int, ...] = (logging.WARNING, logging.INFO, logging.DEBUG)


def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser of the `d2d-power` command

    Returns:
        argparse.ArgumentParser: Parser for config path and overrides
    """
    parser = argparse.ArgumentParser(
        prog="d2d-power",
        description="Seeded Monte-Carlo campaigns of distributed D2D power allocation.",
    )
    parser.add_argument("config", help="JSON experiment configuration")
    parser.add_argument(
        "--seed",
        type=int,
        action="append",
        help="run only this seed; may be given more than once",
    )
    parser.add_argument(
        "--mode",
        choices=[mode.value for mode in ExperimentMode],
        action="append",
        help="run only this mode; may be given more than once",
    )
    parser.add_argument("--output-dir", help="directory result files are written to")
    parser.add_argument(
        "--workers", type=int, help="processes realizations are dispatched to"
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="increase log output (-v info, -vv debug)",
    )
    return parser


def apply_overrides(
    config: ExperimentConfig, arguments: argparse.Namespace
) -> ExperimentConfig:
    """
    Replace configured values by the ones given on the command line

    Args:
        config (ExperimentConfig): Parsed configuration
        arguments (argparse.Namespace): Parsed command line

    Returns:
        ExperimentConfig: Configuration the campaign runs with

    Raises:
        ConfigurationError: If the worker count is not positive.
    """
    if arguments.seed:
        config = replace(config, seeds=list(dict.fromkeys(arguments.seed)))
    if arguments.mode:
        config = replace(
            config, mode=[ExperimentMode(mode) for mode in dict.fromkeys(arguments.mode)]
        )
    if arguments.output_dir:
        config = replace(
            config, output=replace(config.output, directory=arguments.output_dir)
        )
    if arguments.workers is not None:
        if arguments.workers < 1:
            raise ConfigurationError(
                f"Worker count must be positive, got {arguments.workers}"
            )
        config = replace(config, workers=arguments.workers)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run a campaign

    Args:
        argv (Optional[Sequence[str]]): Arguments, `sys.argv[1:]` by default

    Returns:
        int: 0 on success, 1 on configuration errors, 2 on runtime errors and
             3 when some runs failed
    """
    arguments = build_parser().parse_args(argv)
    logging.basicConfig(
        level=LOG_LEVELS[min(arguments.verbose, len(LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = apply_overrides(parse_config(arguments.config), arguments)
    except ConfigurationError as ex:
        print(ex, file=sys.stderr)
        return EXIT_CONFIGURATION

    try:
        report = run_campaign(config)
    except Exception as ex:  # pylint: disable=broad-exception-caught
        logger.exception("Campaign aborted: %s", ex)
        return EXIT_RUNTIME

    if report.failed_runs:
        logger.warning(
            "%d of %d runs failed, see %s",
            report.failed_runs,
            report.total_runs,
            report.output_dir,
        )
        return EXIT_PARTIAL_FAILURE
    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main())
