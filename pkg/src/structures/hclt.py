"""Hidden Chow-Liu tree circuits

Every variable of a Chow-Liu tree gets a latent companion with ``h`` states.
Compiled bottom-up over the tree:

* each variable has ``h`` categorical leaves, one per latent state;
* a non-root variable has a bank of ``h`` sum units over its subtree scope;
  for a tree leaf the bank mixes the variable's leaves directly, otherwise it
  mixes ``h`` products, product ``k`` joining leaf ``k`` with sum ``k`` of
  every child bank;
* the root variable's ``h`` products (or leaves, for a single variable) are
  mixed by one root sum.

A tree over ``n >= 2`` variables yields ``h + (n - 1) * h^2`` parameters.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from circuit.dataset import Dataset
from circuit.exceptions import StructureError
from circuit.model import Circuit, CircuitBuilder
from learning.em import initialize_parameters
from utils.config import HcltConfig

from .chow_liu import ChowLiuTree, chow_liu, estimate_mutual_info

logger = logging.getLogger(__name__)


def compile_hclt(tree: ChowLiuTree, cardinalities: Sequence[int], hidden_states: int) -> Circuit:
    """
    Compile a tree into an HCLT circuit with uniform parameters.

    Raises:
        StructureError: If ``hidden_states`` is below 1
    """
    if hidden_states < 1:
        raise StructureError(f"Need at least one hidden state, got {hidden_states}")
    h = hidden_states
    builder = CircuitBuilder(cardinalities)
    banks: Dict[int, List[int]] = {}

    for var in tree.post_order():
        uniform = np.full(cardinalities[var], 1.0 / cardinalities[var])
        leaves = [builder.input(var, uniform) for _ in range(h)]
        children = tree.children[var]
        if children:
            mixed = [builder.product([leaves[k]] + [banks[c][k] for c in children]) for k in range(h)]
        else:
            mixed = leaves
        if var == tree.root:
            root = builder.sum(mixed)
        else:
            banks[var] = [builder.sum(mixed) for _ in range(h)]

    circuit = builder.build(root)
    logger.debug(f"Compiled HCLT: {circuit.describe()}")
    return circuit


def learn_tree(dataset: Dataset, config: HcltConfig) -> ChowLiuTree:
    """Chow-Liu tree over the dataset's variables, rooted at ``config.root_variable``"""
    mi = estimate_mutual_info(dataset, config.smoothing, config.quantize_buckets)
    return chow_liu(mi, root=config.root_variable)


def build_hclt(dataset: Dataset, config: HcltConfig, tree: Optional[ChowLiuTree] = None) -> Circuit:
    """
    Compile a Chow-Liu tree into an initialized HCLT.

    The tree is learned from ``dataset`` unless one is passed in. Sum
    parameters start from Dirichlet(1) draws and leaves from smoothed
    empirical marginals mixed with noise (see ``initialize_parameters``).
    """
    if tree is None:
        tree = learn_tree(dataset, config)
    structure = compile_hclt(tree, dataset.cardinalities, config.hidden_states)
    circuit = initialize_parameters(structure, dataset, config.seed, pseudocount=config.leaf_pseudocount)
    logger.info(
        f"Built HCLT over {dataset.num_vars} variables with h={config.hidden_states}: "
        f"{circuit.size} parameters"
    )
    return circuit
