#!/usr/bin/env python3
"""
sparsepc - Entry Point

Parses the command line, configures logging and dispatches to the
subcommand handler. Toolkit errors are reported on stderr as
``error: <Type>: <message> key=value ...``.
"""

import logging
import sys
from typing import List, Optional

from circuit.exceptions import CircuitError, ConfigurationError
from cli import create_parser
from utils.config import TOOLKIT_NAME, get_settings
from utils.logger import setup_logging

EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger(TOOLKIT_NAME)


def format_error(error: CircuitError) -> str:
    details = " ".join(f"{key}={value}" for key, value in error.details.items())
    line = f"error: {type(error).__name__}: {error.message}"
    return f"{line} {details}" if details else line


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Arguments without the program name (default: ``sys.argv[1:]``)

    Returns:
        Process exit code: 0 on success, 1 on toolkit errors, 2 on usage
        and configuration errors
    """
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        setup_logging(args.log_config, args.log_level or get_settings().log_level)
        logger.debug(f"Running {args.command}")
        return int(args.handler(args))
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except ConfigurationError as e:
        print(format_error(e), file=sys.stderr)
        return EXIT_USAGE
    except CircuitError as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(format_error(e), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
