"""Argument parser for the sparsepc command line"""

import argparse

from commands import (
    register_inference_commands,
    register_pruning_commands,
    register_structure_commands,
    register_training_commands,
)
from utils.config import TOOLKIT_NAME, TOOLKIT_VERSION


def create_parser() -> argparse.ArgumentParser:
    """
    Build the top-level parser with every subcommand registered.

    Each subcommand stores its handler in ``args.handler``; the handler
    returns the process exit code.
    """
    parser = argparse.ArgumentParser(
        prog=TOOLKIT_NAME,
        description="Learn, prune, grow and evaluate sparse probabilistic circuits",
    )
    parser.add_argument("--version", action="version", version=f"{TOOLKIT_NAME} {TOOLKIT_VERSION}")
    parser.add_argument("--log-level", help="Override the configured log level")
    parser.add_argument("--log-config", help="Logging config YAML (default: config/logging.yaml)")

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    register_structure_commands(subparsers)
    register_training_commands(subparsers)
    register_pruning_commands(subparsers)
    register_inference_commands(subparsers)
    return parser
