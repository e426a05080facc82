"""Pruning and growing commands"""

import argparse
import logging
from pathlib import Path

from circuit.exceptions import ConfigurationError
from learning.grower import GrowConfig, grow
from learning.pruner import PruneHeuristic, prune, pruning_curve
from storage.circuits import load_circuit
from storage.datasets import load_dataset
from storage.reports import curve_to_csv, write_text

from .common import finish

logger = logging.getLogger(__name__)

HEURISTICS = [h.value for h in PruneHeuristic]


def register_pruning_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    Register pruning and growing commands.

    Args:
        subparsers: Subparser collection of the main parser
    """

    def prune_command(args: argparse.Namespace) -> int:
        """Prune a fraction of the edges and report the likelihood drop."""
        circuit = load_circuit(args.model)
        dataset = load_dataset(args.dataset) if args.dataset else None
        if args.curve and dataset is None:
            raise ConfigurationError("--curve needs --dataset")
        pruned, report = prune(
            circuit,
            PruneHeuristic(args.heuristic),
            args.fraction,
            dataset=dataset,
            seed=args.seed,
            renormalize=not args.no_renormalize,
            report_bounds=args.report_bounds,
        )
        report_path = Path(args.report) if args.report else Path(args.out).with_suffix(".report.yaml")
        write_text(report_path, report.to_yaml())
        if args.curve:
            points = pruning_curve(
                circuit, dataset, [PruneHeuristic(h) for h in HEURISTICS], args.fractions, seed=args.seed
            )
            write_text(args.curve, curve_to_csv(points))
        finish(args, pruned, args.seed)
        print(f"pruned_edges\t{len(report.pruned_edges)}")
        print(f"orphaned_edges\t{report.orphaned_edges}")
        print(f"parameters\t{pruned.size}")
        if report.bounded_drop is not None:
            print(f"bounded_drop\t{report.bounded_drop:.10g}")
        if report.approx_drop is not None:
            print(f"approx_drop\t{report.approx_drop:.10g}")
        return 0

    parser = subparsers.add_parser("prune", help="Prune sum edges")
    parser.add_argument("--model", required=True)
    parser.add_argument("--heuristic", choices=HEURISTICS, default=PruneHeuristic.EFLOW.value)
    parser.add_argument("--fraction", type=float, required=True, help="Fraction of edges to remove")
    parser.add_argument("--dataset", help="Rows for flow scoring and drop reporting")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--report-bounds", action="store_true", help="Report exact drops and the drop bound")
    parser.add_argument("--no-renormalize", action="store_true", help="Keep surviving parameters as they are")
    parser.add_argument("--report", help="Prune report YAML (default: next to the model)")
    parser.add_argument("--curve", help="Write a heuristic comparison CSV to this path")
    parser.add_argument(
        "--fractions", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9], help="Fractions for --curve"
    )
    parser.add_argument("--out", required=True, help="Output model")
    parser.set_defaults(handler=prune_command)

    def grow_command(args: argparse.Namespace) -> int:
        """Double a model and perturb the copies."""
        circuit = load_circuit(args.model)
        grown = grow(circuit, GrowConfig(sigma2=args.sigma2, seed=args.seed))
        finish(args, grown, args.seed)
        print(f"parameters\t{grown.size}")
        return 0

    parser = subparsers.add_parser("grow", help="Grow a model")
    parser.add_argument("--model", required=True)
    parser.add_argument("--sigma2", type=float, default=0.1, help="Noise variance")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output model")
    parser.set_defaults(handler=grow_command)
