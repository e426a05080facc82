"""Pairwise mutual information and Chow-Liu trees"""

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from circuit.dataset import Dataset
from circuit.exceptions import DatasetError
from circuit.model import MARGINALIZED
from utils.parallel import map_chunks

logger = logging.getLogger(__name__)

PAIR_CHUNK = 64


def quantize(dataset: Dataset, buckets: int) -> Dataset:
    """
    Coarsen columns with more than ``buckets`` categories into equal-width buckets.

    Missing cells stay missing.
    """
    rows = dataset.rows.copy()
    cardinalities = list(dataset.cardinalities)
    for col, cardinality in enumerate(dataset.cardinalities):
        if cardinality <= buckets:
            continue
        observed = rows[:, col] != MARGINALIZED
        rows[observed, col] = rows[observed, col] * buckets // cardinality
        cardinalities[col] = buckets
    return Dataset(rows, tuple(cardinalities), f"{dataset.name}-q{buckets}")


def _pair_mi(rows: np.ndarray, i: int, j: int, ci: int, cj: int, smoothing: float) -> float:
    observed = (rows[:, i] != MARGINALIZED) & (rows[:, j] != MARGINALIZED)
    joint = np.bincount(
        rows[observed, i] * cj + rows[observed, j], minlength=ci * cj
    ).astype(np.float64).reshape(ci, cj)
    joint += smoothing
    total = joint.sum()
    if total == 0:
        return 0.0
    joint /= total
    outer = joint.sum(axis=1, keepdims=True) * joint.sum(axis=0, keepdims=True)
    nonzero = joint > 0
    return float(max(np.sum(joint[nonzero] * np.log(joint[nonzero] / outer[nonzero])), 0.0))


def estimate_mutual_info(
    dataset: Dataset, smoothing: float = 0.1, quantize_buckets: Optional[int] = None
) -> np.ndarray:
    """
    Pairwise mutual information in nats.

    Joint frequencies of each pair are estimated from rows where both values
    are observed, with ``smoothing`` added to every cell.

    Args:
        dataset: Training rows
        smoothing: Pseudo-count per joint cell
        quantize_buckets: Estimate on a copy quantized to this many buckets

    Returns:
        Symmetric ``(num_vars, num_vars)`` matrix with a zero diagonal

    Raises:
        DatasetError: If the dataset is empty
    """
    if len(dataset) == 0:
        raise DatasetError("Cannot estimate mutual information from an empty dataset")
    if quantize_buckets is not None:
        dataset = quantize(dataset, quantize_buckets)
    rows, cards = dataset.rows, dataset.cardinalities
    pairs = list(combinations(range(dataset.num_vars), 2))

    def block(start: int, end: int) -> List[float]:
        return [_pair_mi(rows, i, j, cards[i], cards[j], smoothing) for i, j in pairs[start:end]]

    values = [v for part in map_chunks(block, len(pairs), chunk_size=PAIR_CHUNK) for v in part]
    mi = np.zeros((dataset.num_vars, dataset.num_vars))
    for (i, j), value in zip(pairs, values):
        mi[i, j] = mi[j, i] = value
    logger.debug(f"Estimated mutual information for {len(pairs)} pairs")
    return mi


@dataclass(frozen=True, eq=False)
class ChowLiuTree:
    """
    Maximum-weight spanning tree over variables.

    Attributes:
        edges: Undirected edges ``(i, j)`` with ``i < j``, sorted
        root: Root variable used to orient the tree
        mutual_info: Matrix the tree was built from
    """
    edges: Tuple[Tuple[int, int], ...]
    root: int
    mutual_info: np.ndarray

    @classmethod
    def from_edges(cls, edges: List[Tuple[int, int]], num_vars: int, root: int = 0) -> "ChowLiuTree":
        """Tree with a fixed edge set and no mutual information attached"""
        normalized = tuple(sorted((min(i, j), max(i, j)) for i, j in edges))
        return cls(edges=normalized, root=root, mutual_info=np.zeros((num_vars, num_vars)))

    @property
    def num_vars(self) -> int:
        return int(self.mutual_info.shape[0])

    @cached_property
    def parents(self) -> Dict[int, Optional[int]]:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_vars))
        graph.add_edges_from(self.edges)
        found: Dict[int, Optional[int]] = {self.root: None}
        found.update(dict(nx.bfs_predecessors(graph, self.root)))
        return found

    @cached_property
    def children(self) -> Dict[int, Tuple[int, ...]]:
        kids: Dict[int, List[int]] = {v: [] for v in range(self.num_vars)}
        for node, parent in self.parents.items():
            if parent is not None:
                kids[parent].append(node)
        return {v: tuple(sorted(c)) for v, c in kids.items()}

    def post_order(self) -> List[int]:
        """Variables with every child before its parent"""
        order: List[int] = []
        stack: List[Tuple[int, bool]] = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            stack.append((node, True))
            for child in reversed(self.children[node]):
                stack.append((child, False))
        return order

    def to_edge_list(self) -> str:
        """Directed edges as ``parent child mutual_info`` lines"""
        lines = [f"# root {self.root}"]
        for node in self.post_order():
            parent = self.parents[node]
            if parent is not None:
                lines.append(f"{parent}\t{node}\t{self.mutual_info[parent, node]:.17g}")
        return "\n".join(lines) + "\n"


def chow_liu(mutual_info: np.ndarray, root: int = 0) -> ChowLiuTree:
    """
    Maximum spanning tree of a mutual information matrix.

    Among edges of equal weight the one with the smaller ``(i, j)`` pair is
    taken first, so the tree is reproducible.
    """
    mutual_info = np.asarray(mutual_info, dtype=np.float64)
    num_vars = mutual_info.shape[0]
    if mutual_info.shape != (num_vars, num_vars):
        raise DatasetError(f"Mutual information matrix must be square, got {mutual_info.shape}")
    if not 0 <= root < max(num_vars, 1):
        raise DatasetError(f"Root variable {root} out of range", {"root": root})

    graph = nx.Graph()
    graph.add_nodes_from(range(num_vars))
    for i, j in combinations(range(num_vars), 2):
        graph.add_edge(i, j, weight=float(mutual_info[i, j]))
    tree = nx.maximum_spanning_tree(graph, algorithm="kruskal")
    edges = tuple(sorted((min(i, j), max(i, j)) for i, j in tree.edges()))
    logger.debug(f"Chow-Liu tree with {len(edges)} edges rooted at {root}")
    return ChowLiuTree(edges=edges, root=root, mutual_info=mutual_info)
