"""
Command-line entry point for scatternet.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from scatternet import __version__
from scatternet.commands import COMMANDS
from scatternet.exceptions import ConfigurationError
from scatternet.models.run_config import RunConfig
from scatternet.settings import configure_logging, get_settings
from scatternet.utils.error_handler import EXIT_USAGE, ErrorHandler

logger = logging.getLogger(__name__)

INPUT_PATH_KEYS = ("data", "weights")


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that reports usage errors as ConfigurationError."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="scatternet",
        description="Nonlinear electromagnetic inverse scattering: simulation, classical inversion and CNN cascades.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="worker cap; default SCATTERNET_THREADS or CPU count")
    parser.add_argument("--log-level", default=None, choices=("DEBUG", "INFO", "WARNING", "ERROR"),
                        type=str.upper, help="log level; default SCATTERNET_LOG_LEVEL or INFO")
    parser.add_argument("--config", default=None, help="key = value file with flag defaults")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS.values():
        command.register(subparsers)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> Optional[argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> None:
    """Install config-file values as defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return

    config = RunConfig.load(known.config)
    command = next((token for token in rest if token in COMMANDS), None)
    sub = _subparser(parser, command) if command else None
    targets = [parser] + ([sub] if sub is not None else [])
    values = config.resolve(*targets)

    for target in targets:
        owned = {
            action.dest: action
            for action in target._actions
            if action.option_strings and action.dest in values
        }
        if not owned:
            continue
        target.set_defaults(**{dest: values[dest] for dest in owned})
        for action in owned.values():
            action.required = False


def _check_inputs(args: argparse.Namespace) -> None:
    for key in INPUT_PATH_KEYS:
        path = getattr(args, key, None)
        if path is not None and not Path(path).is_file():
            raise ConfigurationError(f"--{key} {path} does not exist")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        int: 0 on success, 1 on runtime failure, 2 on usage errors
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError(f"--threads must be at least 1, got {args.threads}")
        _check_inputs(args)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except ConfigurationError as e:
        print(ErrorHandler.format_error_line(e), file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.log_level)
    get_settings().set_threads(args.threads)
    logger.debug(f"command={args.command} threads={get_settings().threads}")

    try:
        return args.handler(args)
    except Exception as e:
        ErrorHandler.log_error(e, args.command)
        print(ErrorHandler.format_error_line(e), file=sys.stderr)
        return ErrorHandler.to_exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
