"""Top-down probabilities and circuit flows

Both quantities come from the same backward pass over the layer plan. With
all unit log-probabilities at zero the pass yields the sample-independent
top-down probabilities; with an evaluation trace it yields the flows
conditioned on that sample.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.parallel import map_chunks

from .dataset import Dataset, check_evidence
from .evaluation import EvalTrace, forward
from .exceptions import ZeroLikelihoodError
from .model import Circuit

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TopDownTable:
    """
    Probability that each unit / sum edge is visited by unconditional sampling.

    Attributes:
        unit_prob: ``q(n)`` per unit id
        edge_prob: ``q(n, c)`` per sum edge, in the circuit's edge order
    """
    unit_prob: np.ndarray
    edge_prob: np.ndarray


@dataclass(eq=False)
class FlowTable:
    """
    Unit and edge flows, summed over ``sample_count`` samples.

    Attributes:
        unit_flow: ``F_n`` per unit id
        edge_flow: ``F_{n,c}`` per sum edge, in the circuit's edge order
        leaf_counts: Per input unit, flow mass observed on each category
        sample_count: Number of aggregated samples
    """
    unit_flow: np.ndarray
    edge_flow: np.ndarray
    leaf_counts: Dict[int, np.ndarray] = field(default_factory=dict)
    sample_count: int = 0

    def __add__(self, other: "FlowTable") -> "FlowTable":
        return FlowTable(
            unit_flow=self.unit_flow + other.unit_flow,
            edge_flow=self.edge_flow + other.edge_flow,
            leaf_counts={u: c + other.leaf_counts[u] for u, c in self.leaf_counts.items()},
            sample_count=self.sample_count + other.sample_count,
        )

    def edge(self, circuit: Circuit, parent: int, child: int) -> float:
        return float(self.edge_flow[circuit.edges.edge_id(parent, child)])

    def to_csv(self, circuit: Circuit) -> str:
        """Edge flows as ``parent,child,value`` rows"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["parent", "child", "value"])
        for (parent, child), value in zip(circuit.edges.pairs(), self.edge_flow):
            writer.writerow([parent, child, repr(float(value))])
        return buffer.getvalue()


def _backward(
    circuit: Circuit, logp: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Push flow from the root down the layer plan.

    Args:
        circuit: Circuit being analysed
        logp: ``(num_units + 1, num_rows)`` log-probabilities from ``forward``
            (all zeros for top-down probabilities)

    Returns:
        ``(unit_flow, edge_flow)`` with shapes ``(num_units, num_rows)`` and
        ``(num_edges, num_rows)``
    """
    num_rows = logp.shape[1]
    flow = np.zeros((circuit.num_units + 1, num_rows))
    edge_flow = np.zeros((circuit.size + 1, num_rows))
    flow[circuit.root] = 1.0
    with np.errstate(invalid="ignore", over="ignore"):
        for kernel in reversed(circuit.kernels):
            if kernel.sum_ids.size:
                parent_flow = flow[kernel.sum_ids]
                parent_logp = logp[kernel.sum_ids]
                dead = np.isneginf(parent_logp) | (parent_flow == 0.0)
                for j in range(kernel.sum_children.shape[1]):
                    ratio = np.exp(
                        kernel.sum_log_params[:, j, None]
                        + logp[kernel.sum_children[:, j]]
                        - parent_logp
                    )
                    contribution = np.where(dead, 0.0, ratio * parent_flow)
                    edge_flow[kernel.sum_edges[:, j]] = contribution
                    np.add.at(flow, kernel.sum_children[:, j], contribution)
            if kernel.product_ids.size:
                parent_flow = flow[kernel.product_ids]
                for j in range(kernel.product_children.shape[1]):
                    np.add.at(flow, kernel.product_children[:, j], parent_flow)
    return flow[: circuit.num_units], edge_flow[: circuit.size]


def top_down(circuit: Circuit) -> TopDownTable:
    """
    Compute top-down probabilities in one backward pass.

    The root gets 1; a sum unit splits its probability over its children in
    proportion to the edge parameters; a product passes its probability to
    every child.
    """
    unit_prob, edge_prob = _backward(circuit, np.zeros((circuit.num_units + 1, 1)))
    return TopDownTable(unit_prob=unit_prob[:, 0], edge_prob=edge_prob[:, 0])


def _leaf_counts(circuit: Circuit, rows: np.ndarray, unit_flow: np.ndarray) -> Dict[int, np.ndarray]:
    counts: Dict[int, np.ndarray] = {}
    for uid in circuit.input_ids:
        dist = circuit.units[uid].distribution
        values = rows[:, dist.variable]
        observed = values >= 0
        counts[uid] = np.bincount(
            values[observed], weights=unit_flow[uid][observed], minlength=dist.cardinality
        ).astype(np.float64)
    return counts


def circuit_flow(circuit: Circuit, trace: EvalTrace) -> FlowTable:
    """
    Flows of a single sample from its evaluation trace.

    Raises:
        ZeroLikelihoodError: If the sample has probability zero
    """
    if np.isneginf(trace.root_logp):
        raise ZeroLikelihoodError("Flow is undefined for a zero-probability sample", row=0)
    logp = np.append(trace.logp, 0.0)[:, None]
    unit_flow, edge_flow = _backward(circuit, logp)
    rows = trace.sample.as_array()[None, :]
    return FlowTable(
        unit_flow=unit_flow[:, 0],
        edge_flow=edge_flow[:, 0],
        leaf_counts=_leaf_counts(circuit, rows, unit_flow),
        sample_count=1,
    )


def sample_flows(
    circuit: Circuit, rows: np.ndarray, row_ids: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-row flows of a block of rows.

    Args:
        circuit: Circuit being analysed
        rows: Evidence block
        row_ids: Dataset index of every row in the block, for error reports

    Returns:
        ``(root_logp, unit_flow, edge_flow)`` with one column per row

    Raises:
        ZeroLikelihoodError: On the first row with probability zero
    """
    logp = forward(circuit, rows)
    zero = np.flatnonzero(np.isneginf(logp[circuit.root]))
    if zero.size:
        row = int(zero[0]) if row_ids is None else int(row_ids[zero[0]])
        raise ZeroLikelihoodError(f"Row {row} has zero likelihood", row=row)
    unit_flow, edge_flow = _backward(circuit, logp)
    return logp[circuit.root], unit_flow, edge_flow


def aggregate_flows(
    circuit: Circuit, dataset: Dataset, indices: Optional[np.ndarray] = None
) -> FlowTable:
    """
    Sum per-sample flows over a dataset.

    Chunks are processed in parallel and reduced in chunk order.

    Args:
        circuit: Circuit being analysed
        dataset: Rows to aggregate over
        indices: Optional row subset (e.g. a mini-batch), in the given order

    Raises:
        ZeroLikelihoodError: If any row has zero likelihood (reports its index)
    """
    rows = dataset.rows if indices is None else dataset.rows[indices]
    check_evidence(circuit.cardinalities, rows)

    def block(start: int, end: int) -> FlowTable:
        chunk = rows[start:end]
        ids = np.arange(start, end) if indices is None else indices[start:end]
        _, unit_flow, edge_flow = sample_flows(circuit, chunk, row_ids=ids)
        return FlowTable(
            unit_flow=unit_flow.sum(axis=1),
            edge_flow=edge_flow.sum(axis=1),
            leaf_counts=_leaf_counts(circuit, chunk, unit_flow),
            sample_count=end - start,
        )

    table = empty_flow_table(circuit)
    parts: List[FlowTable] = map_chunks(block, rows.shape[0])
    for part in parts:
        table = table + part
    logger.debug(f"Aggregated flows over {table.sample_count} rows in {len(parts)} chunks")
    return table


def empty_flow_table(circuit: Circuit) -> FlowTable:
    return FlowTable(
        unit_flow=np.zeros(circuit.num_units),
        edge_flow=np.zeros(circuit.size),
        leaf_counts={
            uid: np.zeros(circuit.units[uid].distribution.cardinality) for uid in circuit.input_ids
        },
        sample_count=0,
    )


def row_flows(circuit: Circuit, dataset: Dataset) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-row flows over a whole dataset, kept unreduced.

    Returns:
        ``(root_logp, unit_flow, edge_flow)`` with shapes ``(num_rows,)``,
        ``(num_units, num_rows)`` and ``(num_edges, num_rows)``

    Raises:
        ZeroLikelihoodError: If any row has zero likelihood (reports its index)
    """
    check_evidence(circuit.cardinalities, dataset.rows)
    parts = map_chunks(
        lambda s, e: sample_flows(circuit, dataset.rows[s:e], row_ids=np.arange(s, e)), len(dataset)
    )
    if not parts:
        return np.zeros(0), np.zeros((circuit.num_units, 0)), np.zeros((circuit.size, 0))
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts], axis=1),
        np.concatenate([p[2] for p in parts], axis=1),
    )
