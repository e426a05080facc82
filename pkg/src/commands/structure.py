"""Structure construction and validation commands"""

import argparse
import logging

from circuit.validation import validate
from storage.circuits import load_circuit
from storage.reports import write_text
from structures.hclt import build_hclt, learn_tree
from utils.config import HcltConfig

from .common import (
    add_config_argument,
    experiment,
    finish,
    require_dataset,
    resolve_output,
    seed_of,
    with_overrides,
)

logger = logging.getLogger(__name__)


def register_structure_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    Register structure commands.

    Args:
        subparsers: Subparser collection of the main parser
    """

    def build_hclt_command(args: argparse.Namespace) -> int:
        """Learn a Chow-Liu tree and compile it into an initialized HCLT circuit."""
        config = experiment(args)
        train = require_dataset(args, config, "train")
        seed = seed_of(args, config)
        base = config.structure if config is not None else HcltConfig(seed=seed)
        structure = with_overrides(
            base,
            {
                "hidden_states": args.hidden,
                "smoothing": args.smoothing,
                "quantize_buckets": args.quantize,
                "root_variable": args.root_variable,
                "seed": args.seed,
            },
        )

        resolve_output(args, config)
        tree = learn_tree(train, structure)
        circuit = build_hclt(train, structure, tree=tree)
        if args.tree_out:
            write_text(args.tree_out, tree.to_edge_list())
        finish(args, circuit, structure.seed, config)
        print(f"parameters\t{circuit.size}")
        return 0

    parser = subparsers.add_parser("build-hclt", help="Build an HCLT circuit from data")
    parser.add_argument("--data", help="Training CSV or binary dataset")
    parser.add_argument("--hidden", type=int, help="Latent states per variable")
    parser.add_argument("--smoothing", type=float, help="Pseudo-count for mutual information")
    parser.add_argument("--quantize", type=int, help="Estimate mutual information on this many buckets")
    parser.add_argument("--root-variable", type=int, help="Variable at the tree root")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tree-out", help="Also write the Chow-Liu tree as an edge list")
    parser.add_argument("--out", help="Output model (default: <output_dir>/<command>.pcb)")
    add_config_argument(parser)
    parser.set_defaults(handler=build_hclt_command)

    def validate_command(args: argparse.Namespace) -> int:
        """List structural violations; nonzero exit when there are any."""
        circuit = load_circuit(args.model, strict=False)
        violations = validate(circuit)
        for violation in violations:
            print(violation)
        if violations:
            logger.error(f"{args.model}: {len(violations)} violations")
            return 1
        print(f"ok\t{circuit.num_units} units\t{circuit.size} parameters")
        return 0

    parser = subparsers.add_parser("validate", help="Check a model's structural properties")
    parser.add_argument("--model", required=True)
    parser.set_defaults(handler=validate_command)
