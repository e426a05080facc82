"""Layer segmentation for batched evaluation

Units are grouped so that every unit's children live in strictly earlier
groups. Each group is then compiled into padded index/parameter matrices so a
whole layer is evaluated with a handful of vectorized numpy operations.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple

import networkx as nx
import numpy as np

from .exceptions import StructureError

if TYPE_CHECKING:
    from .model import Circuit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerPlan:
    """
    Ordered unit groups; group ``g`` depends only on groups ``< g``.

    Attributes:
        groups: Unit ids per layer, ascending within a layer
        depth: Layer index of every unit
    """
    groups: Tuple[Tuple[int, ...], ...]
    depth: np.ndarray

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)


def build_layers(circuit: "Circuit") -> LayerPlan:
    """
    Minimal-depth greedy layering: layer(n) = 1 + max layer of n's children.

    Args:
        circuit: Circuit to segment

    Returns:
        Deterministic layer plan

    Raises:
        StructureError: If the unit graph contains a cycle
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(circuit.num_units))
    for unit in circuit.units:
        graph.add_edges_from((child, unit.id) for child in unit.children)

    try:
        generations = [tuple(sorted(g)) for g in nx.topological_generations(graph)]
    except nx.NetworkXUnfeasible:
        raise StructureError("Cycle detected while computing layers") from None

    depth = np.empty(circuit.num_units, dtype=np.int64)
    for index, group in enumerate(generations):
        depth[list(group)] = index
    return LayerPlan(groups=tuple(generations), depth=depth)


@dataclass(frozen=True)
class LayerKernel:
    """
    Padded arrays for one layer.

    Padding child slots point at the sentinel row ``num_units`` (which holds
    log-probability 0 / flow 0); padded sum parameters are ``-inf``.
    """
    input_ids: np.ndarray
    input_vars: np.ndarray
    input_table: np.ndarray
    sum_ids: np.ndarray
    sum_children: np.ndarray
    sum_log_params: np.ndarray
    sum_edges: np.ndarray
    product_ids: np.ndarray
    product_children: np.ndarray


def _pad(rows: List[Tuple[int, ...]], fill: int) -> np.ndarray:
    width = max((len(r) for r in rows), default=0)
    out = np.full((len(rows), width), fill, dtype=np.int64)
    for i, row in enumerate(rows):
        out[i, : len(row)] = row
    return out


def compile_layers(circuit: "Circuit") -> Tuple[LayerKernel, ...]:
    """Compile the circuit's layer plan into per-layer kernels"""
    sentinel = circuit.num_units
    no_edge = circuit.size
    ranges = circuit.edges.range_of
    kernels = []
    for group in circuit.layers.groups:
        inputs = [circuit.units[u] for u in group if circuit.units[u].is_input]
        sums = [circuit.units[u] for u in group if circuit.units[u].is_sum]
        products = [circuit.units[u] for u in group if circuit.units[u].is_product]

        width = max((u.distribution.cardinality for u in inputs), default=0)
        table = np.full((len(inputs), width), -np.inf)
        for i, unit in enumerate(inputs):
            table[i, : unit.distribution.cardinality] = unit.distribution.log_probabilities

        sum_children = _pad([u.children for u in sums], sentinel)
        sum_log_params = np.full(sum_children.shape, -np.inf)
        sum_edges = np.full(sum_children.shape, no_edge, dtype=np.int64)
        for i, unit in enumerate(sums):
            start, end = ranges[unit.id]
            sum_log_params[i, : end - start] = unit.log_params
            sum_edges[i, : end - start] = np.arange(start, end)

        kernels.append(
            LayerKernel(
                input_ids=np.asarray([u.id for u in inputs], dtype=np.int64),
                input_vars=np.asarray([u.distribution.variable for u in inputs], dtype=np.int64),
                input_table=table,
                sum_ids=np.asarray([u.id for u in sums], dtype=np.int64),
                sum_children=sum_children,
                sum_log_params=sum_log_params,
                sum_edges=sum_edges,
                product_ids=np.asarray([u.id for u in products], dtype=np.int64),
                product_children=_pad([u.children for u in products], sentinel),
            )
        )
    logger.debug(f"Compiled {len(kernels)} layers for {circuit.num_units} units")
    return tuple(kernels)
