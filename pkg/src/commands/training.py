"""Parameter and structure learning commands"""

import argparse
import logging
from pathlib import Path

from circuit.evaluation import log_likelihood
from learning.em import em_full_batch, em_stochastic
from learning.loop import compress, structure_learn
from utils.config import CompressConfig, LoopConfig

from .common import (
    add_config_argument,
    em_config,
    experiment,
    finish,
    initial_circuit,
    optional_dataset,
    require_dataset,
    resolve_output,
    seed_of,
    with_overrides,
)

logger = logging.getLogger(__name__)


def _log_path(args: argparse.Namespace) -> Path:
    return Path(args.log) if args.log else Path(args.out).with_suffix(".trainlog.csv")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="Starting model (default: HCLT built from the training data)")
    parser.add_argument("--data", help="Training dataset")
    parser.add_argument("--valid", help="Validation dataset")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--smoothing", type=float, help="Laplace pseudo-flow")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="Output model (default: <output_dir>/<command>.pcb)")
    parser.add_argument("--log", help="Training log CSV (default: next to the model)")
    add_config_argument(parser)


def register_training_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    Register learning commands.

    Args:
        subparsers: Subparser collection of the main parser
    """

    def train_command(args: argparse.Namespace) -> int:
        """Fit parameters with full-batch or mini-batch EM."""
        config = experiment(args)
        resolve_output(args, config)
        train = require_dataset(args, config, "train")
        valid = optional_dataset(args, config, "valid")
        seed = seed_of(args, config)
        circuit = initial_circuit(args, config, train, seed)
        em = em_config(args, config, seed)
        if args.full_batch:
            epochs = args.epochs if args.epochs is not None else em.total_epochs
            circuit, log = em_full_batch(circuit, train, em.smoothing, epochs, valid=valid)
        else:
            circuit, log = em_stochastic(circuit, train, em, valid=valid)
        log.save(_log_path(args))
        finish(args, circuit, seed, config)
        print(f"train_ll\t{log_likelihood(circuit, train):.10g}")
        return 0

    parser = subparsers.add_parser("train", help="Learn parameters with EM")
    _add_common(parser)
    parser.add_argument("--full-batch", action="store_true", help="Use full-batch EM")
    parser.add_argument("--epochs", type=int, help="Full-batch epochs (default: schedule length)")
    parser.set_defaults(handler=train_command)

    def spgrow_command(args: argparse.Namespace) -> int:
        """Alternate flow pruning, growing and finetuning."""
        config = experiment(args)
        resolve_output(args, config)
        train = require_dataset(args, config, "train")
        valid = optional_dataset(args, config, "valid")
        if valid is None:
            logger.warning("No validation data; early stopping uses the training data")
            valid = train
        seed = seed_of(args, config)
        circuit = initial_circuit(args, config, train, seed)
        base = config.loop if config is not None else LoopConfig(seed=seed)
        loop = with_overrides(
            base,
            {
                "prune_fraction": args.prune_fraction,
                "grow_sigma2": args.sigma2,
                "max_iterations": args.iterations,
                "patience": args.patience,
                "seed": args.seed,
            },
        )
        circuit, log = structure_learn(circuit, train, valid, loop, em_config(args, config, seed))
        log.save(_log_path(args))
        finish(args, circuit, seed, config)
        print(f"train_ll\t{log_likelihood(circuit, train):.10g}")
        print(f"valid_ll\t{log_likelihood(circuit, valid):.10g}")
        return 0

    parser = subparsers.add_parser("spgrow", help="Structure learning by pruning and growing")
    _add_common(parser)
    parser.add_argument("--prune-fraction", type=float)
    parser.add_argument("--sigma2", type=float, help="Growing noise variance")
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--patience", type=int)
    parser.set_defaults(handler=spgrow_command)

    def compress_command(args: argparse.Namespace) -> int:
        """Prune and finetune until the training likelihood budget is spent."""
        config = experiment(args)
        resolve_output(args, config)
        train = require_dataset(args, config, "train")
        seed = seed_of(args, config)
        circuit = initial_circuit(args, config, train, seed)
        base = config.compress if config is not None else CompressConfig()
        settings = with_overrides(
            base,
            {
                "step_fraction": args.step_fraction,
                "ll_budget": args.budget,
                "max_steps": args.max_steps,
            },
        )
        result = compress(circuit, train, settings, em_config(args, config, seed))
        result.log.save(_log_path(args))
        finish(args, result.circuit, seed, config)
        print(f"parameters\t{result.circuit.size}")
        print(f"compression_rate\t{result.rate:.10g}")
        return 0

    parser = subparsers.add_parser("compress", help="Compress a model within a likelihood budget")
    _add_common(parser)
    parser.add_argument("--step-fraction", type=float)
    parser.add_argument("--budget", type=float, help="Allowed relative train-LL drop")
    parser.add_argument("--max-steps", type=int)
    parser.set_defaults(handler=compress_command)
