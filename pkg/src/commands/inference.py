"""Evaluation, sampling and inspection commands"""

import argparse
import logging

from circuit.evaluation import ll_to_bpd, log_likelihood
from circuit.sampler import sample_batch
from storage.circuits import load_circuit
from storage.datasets import load_dataset, save_csv
from storage.reports import param_histogram, write_text

from .common import finish

logger = logging.getLogger(__name__)


def register_inference_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    Register evaluation and sampling commands.

    Args:
        subparsers: Subparser collection of the main parser
    """

    def eval_command(args: argparse.Namespace) -> int:
        circuit = load_circuit(args.model)
        dataset = load_dataset(args.dataset)
        mean_ll = log_likelihood(circuit, dataset)
        print(f"mean_ll\t{mean_ll:.10g}")
        print(f"bpd\t{ll_to_bpd(mean_ll, circuit.num_vars):.10g}")
        return 0

    parser = subparsers.add_parser("eval", help="Mean log-likelihood and bits per dimension")
    parser.add_argument("--model", required=True)
    parser.add_argument("--dataset", required=True)
    parser.set_defaults(handler=eval_command)

    def sample_command(args: argparse.Namespace) -> int:
        """Draw rows; the same seed always yields the same file."""
        circuit = load_circuit(args.model)
        samples = sample_batch(circuit, args.count, args.seed)
        save_csv(samples, args.out)
        finish(args, None, args.seed)
        logger.info(f"Wrote {args.count} samples to {args.out}")
        return 0

    parser = subparsers.add_parser("sample", help="Draw samples to CSV")
    parser.add_argument("--model", required=True)
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output CSV")
    parser.set_defaults(handler=sample_command)

    def histogram_command(args: argparse.Namespace) -> int:
        table = param_histogram(load_circuit(args.model), args.bins)
        if args.out:
            write_text(args.out, table)
            finish(args, None, None)
        else:
            print(table, end="")
        return 0

    parser = subparsers.add_parser("histogram", help="Histogram of sum parameters")
    parser.add_argument("--model", required=True)
    parser.add_argument("--bins", type=int, default=10)
    parser.add_argument("--out", help="Output CSV (default: stdout)")
    parser.set_defaults(handler=histogram_command)
