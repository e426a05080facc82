"""Flow-based expectation maximization

Sum parameters move to ``(F_{n,c} + gamma) / (F_n + gamma * |ch(n)|)`` and
categorical leaves to their flow-weighted category counts, smoothed the same
way. The stochastic variant computes the update on a mini-batch and blends it
into the current parameters with an annealed step size.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from circuit.dataset import Dataset
from circuit.evaluation import log_likelihood
from circuit.flows import FlowTable, aggregate_flows
from circuit.model import MARGINALIZED, Circuit
from utils.config import EmConfig, ScheduleSegment

from .trainlog import TrainLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParameterUpdate:
    """
    Target parameters of one EM step, in linear space.

    Attributes:
        edge_params: Per sum edge, in the circuit's edge order
        leaf_params: Per input unit id, its new category distribution
    """
    edge_params: np.ndarray
    leaf_params: Dict[int, np.ndarray]


def em_update(circuit: Circuit, flows: FlowTable, smoothing: float) -> ParameterUpdate:
    """
    Closed-form maximizer of the expected complete log-likelihood.

    Sum units (and leaves) that received no flow and no smoothing keep their
    current parameters.
    """
    edges = circuit.edges
    current = circuit.linear_params()
    edge_params = current.copy()
    for n in edges.sum_ids:
        start, end = edges.range_of[int(n)]
        numerator = flows.edge_flow[start:end] + smoothing
        denominator = numerator.sum()
        if denominator > 0:
            edge_params[start:end] = numerator / denominator

    leaf_params: Dict[int, np.ndarray] = {}
    for uid in circuit.input_ids:
        numerator = flows.leaf_counts[uid] + smoothing
        denominator = numerator.sum()
        if denominator > 0:
            leaf_params[uid] = numerator / denominator
    return ParameterUpdate(edge_params=edge_params, leaf_params=leaf_params)


def apply_update(circuit: Circuit, update: ParameterUpdate, alpha: float = 1.0) -> Circuit:
    """
    Blend ``alpha * new + (1 - alpha) * old`` in linear space.

    ``alpha == 1`` installs the update exactly; ``alpha == 0`` returns the
    circuit unchanged.
    """
    if alpha == 0.0:
        return circuit
    edge_params = alpha * update.edge_params + (1.0 - alpha) * circuit.linear_params()
    with np.errstate(divide="ignore"):
        blended = circuit.with_edge_log_params(np.log(edge_params))
    leaves = {
        uid: alpha * probs + (1.0 - alpha) * circuit.units[uid].distribution.probabilities
        for uid, probs in update.leaf_params.items()
    }
    return blended.with_input_probabilities(leaves)


def _epoch_ll(circuit: Circuit, dataset: Dataset) -> float:
    return log_likelihood(circuit, dataset) if len(dataset) else math.nan


def em_full_batch(
    circuit: Circuit,
    dataset: Dataset,
    smoothing: float,
    epochs: int,
    valid: Optional[Dataset] = None,
    iteration: int = 0,
) -> Tuple[Circuit, TrainLog]:
    """
    Run full-batch EM.

    Args:
        circuit: Starting circuit
        dataset: Training rows; every row must have positive likelihood
        smoothing: Laplace pseudo-flow ``gamma``
        epochs: Number of updates
        valid: Optional validation rows, evaluated once per epoch
        iteration: Loop iteration recorded in the log

    Returns:
        Trained circuit and its per-epoch log

    Raises:
        ZeroLikelihoodError: If a training row has zero likelihood
    """
    log = TrainLog(circuit.num_vars)
    for epoch in range(epochs):
        flows = aggregate_flows(circuit, dataset)
        circuit = apply_update(circuit, em_update(circuit, flows, smoothing))
        entry = log.record(
            "em",
            _epoch_ll(circuit, dataset),
            circuit.size,
            iteration=iteration,
            valid_ll=_epoch_ll(circuit, valid) if valid is not None else None,
        )
        logger.debug(f"Full-batch epoch {epoch}: train LL {entry.train_ll:.6f}")
    return circuit, log


def step_sizes(segment: ScheduleSegment, steps_per_epoch: int) -> Iterator[Tuple[int, float]]:
    """
    Yield ``(epoch_within_segment, alpha)`` for every step of a segment.

    ``alpha`` moves linearly from ``alpha_start`` on the first step to
    ``alpha_end`` on the last.
    """
    total = segment.epochs * steps_per_epoch
    for step in range(total):
        fraction = step / (total - 1) if total > 1 else 0.0
        yield step // steps_per_epoch, segment.alpha_start + (segment.alpha_end - segment.alpha_start) * fraction


def em_stochastic(
    circuit: Circuit,
    dataset: Dataset,
    config: EmConfig,
    valid: Optional[Dataset] = None,
    iteration: int = 0,
    phase: str = "em",
) -> Tuple[Circuit, TrainLog]:
    """
    Run mini-batch EM over the annealing schedule.

    Each epoch draws a fresh permutation of the rows and walks it in batches
    of ``batch_size`` (the last batch may be smaller). Rows inside a batch are
    visited in index order, so a single full batch reproduces full-batch EM.

    Args:
        circuit: Starting circuit
        dataset: Training rows
        config: Batch size, smoothing, schedule and seed
        valid: Optional validation rows, evaluated once per epoch
        iteration: Loop iteration recorded in the log
        phase: Phase label recorded in the log

    Returns:
        Trained circuit and its per-epoch log
    """
    log = TrainLog(circuit.num_vars)
    num_rows = len(dataset)
    if num_rows == 0 or config.total_epochs == 0:
        return circuit, log
    batch_size = config.batch_size
    if batch_size > num_rows:
        logger.warning(f"Batch size {batch_size} exceeds {num_rows} rows; using {num_rows}")
        batch_size = num_rows
    steps_per_epoch = math.ceil(num_rows / batch_size)
    rng = np.random.default_rng(config.seed)

    for number, segment in enumerate(config.schedule):
        current_epoch = -1
        batches: List[np.ndarray] = []
        previous_alpha = segment.alpha_start
        for epoch, alpha in step_sizes(segment, steps_per_epoch):
            if epoch != current_epoch:
                if current_epoch >= 0:
                    _record_epoch(log, circuit, dataset, valid, iteration, phase, previous_alpha)
                current_epoch = epoch
                order = rng.permutation(num_rows)
                batches = [np.sort(order[i : i + batch_size]) for i in range(0, num_rows, batch_size)]
            batch = batches.pop(0)
            if alpha > 0.0:
                flows = aggregate_flows(circuit, dataset, indices=batch)
                circuit = apply_update(circuit, em_update(circuit, flows, config.smoothing), alpha)
            previous_alpha = alpha
        if current_epoch >= 0:
            _record_epoch(log, circuit, dataset, valid, iteration, phase, previous_alpha)
        logger.info(
            f"Schedule segment {number} done ({segment.epochs} epochs, "
            f"alpha {segment.alpha_start}->{segment.alpha_end})"
        )
    return circuit, log


def _record_epoch(
    log: TrainLog,
    circuit: Circuit,
    dataset: Dataset,
    valid: Optional[Dataset],
    iteration: int,
    phase: str,
    alpha: float,
) -> None:
    entry = log.record(
        phase,
        _epoch_ll(circuit, dataset),
        circuit.size,
        iteration=iteration,
        alpha=alpha,
        valid_ll=_epoch_ll(circuit, valid) if valid is not None else None,
    )
    logger.debug(f"Epoch {entry.epoch}: train LL {entry.train_ll:.6f}, alpha {alpha:.4g}")


def initialize_parameters(
    circuit: Circuit, dataset: Dataset, seed: int, pseudocount: float = 1.0
) -> Circuit:
    """
    Random starting point for EM.

    Sum parameters are drawn from a symmetric Dirichlet(1). Each leaf is an
    even mix of its variable's smoothed empirical marginal and a Dirichlet(1)
    draw, so leaves on the same variable start apart.
    """
    rng = np.random.default_rng(seed)
    edges = circuit.edges
    log_params = np.empty(circuit.size)
    for n in edges.sum_ids:
        start, end = edges.range_of[int(n)]
        log_params[start:end] = np.log(rng.dirichlet(np.ones(end - start)))

    marginals = []
    for var, cardinality in enumerate(circuit.cardinalities):
        column = dataset.rows[:, var] if len(dataset) else np.zeros(0, dtype=np.int64)
        counts = np.bincount(column[column != MARGINALIZED], minlength=cardinality).astype(np.float64)
        counts += pseudocount
        marginals.append(counts / counts.sum() if counts.sum() > 0 else np.full(cardinality, 1.0 / cardinality))

    leaves = {}
    for uid in circuit.input_ids:
        dist = circuit.units[uid].distribution
        noise = rng.dirichlet(np.ones(dist.cardinality))
        leaves[uid] = 0.5 * marginals[dist.variable] + 0.5 * noise
    return circuit.with_edge_log_params(log_params).with_input_probabilities(leaves)
