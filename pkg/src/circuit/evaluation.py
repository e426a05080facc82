"""Log-space feedforward evaluation

Evaluation walks the layer plan bottom-up. Inside a layer every unit is
computed for a block of rows at once; reductions over children are unrolled
into elementwise operations in child order, so a row's result does not
depend on how many other rows share its block.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from utils.parallel import map_chunks

from .dataset import Dataset, Sample, as_sample, check_evidence
from .exceptions import DatasetError
from .model import Circuit

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EvalTrace:
    """
    Per-unit log-probabilities for one sample.

    Attributes:
        logp: ``log p_n(x)`` for every unit id
        sample: The evidence the trace was computed for
        root: Root unit id of the evaluated circuit
    """
    logp: np.ndarray
    sample: Sample
    root: int

    @property
    def root_logp(self) -> float:
        return float(self.logp[self.root])

    @property
    def root_probability(self) -> float:
        return math.exp(self.root_logp)

    def probability(self, unit_id: int) -> float:
        return math.exp(float(self.logp[unit_id]))


def forward(circuit: Circuit, rows: np.ndarray) -> np.ndarray:
    """
    Evaluate every unit on a block of rows.

    Args:
        circuit: Circuit to evaluate
        rows: ``(num_rows, num_vars)`` evidence matrix (already checked)

    Returns:
        ``(num_units + 1, num_rows)`` log-probabilities; the extra last row is
        the zero-valued padding sentinel
    """
    num_rows = rows.shape[0]
    logp = np.zeros((circuit.num_units + 1, num_rows))
    with np.errstate(divide="ignore", invalid="ignore"):
        for kernel in circuit.kernels:
            if kernel.input_ids.size:
                values = rows[:, kernel.input_vars].T
                missing = values < 0
                picked = kernel.input_table[
                    np.arange(kernel.input_ids.size)[:, None], np.where(missing, 0, values)
                ]
                logp[kernel.input_ids] = np.where(missing, 0.0, picked)

            if kernel.product_ids.size:
                acc = np.zeros((kernel.product_ids.size, num_rows))
                for j in range(kernel.product_children.shape[1]):
                    acc += logp[kernel.product_children[:, j]]
                logp[kernel.product_ids] = acc

            if kernel.sum_ids.size:
                width = kernel.sum_children.shape[1]
                top = np.full((kernel.sum_ids.size, num_rows), -np.inf)
                for j in range(width):
                    top = np.maximum(
                        top, logp[kernel.sum_children[:, j]] + kernel.sum_log_params[:, j, None]
                    )
                shift = np.where(np.isfinite(top), top, 0.0)
                acc = np.zeros_like(top)
                for j in range(width):
                    acc += np.exp(
                        logp[kernel.sum_children[:, j]] + kernel.sum_log_params[:, j, None] - shift
                    )
                logp[kernel.sum_ids] = np.log(acc) + shift
    logp[circuit.num_units] = 0.0
    return logp


def evaluate(circuit: Circuit, sample: Union[Sample, Sequence, np.ndarray]) -> EvalTrace:
    """
    Compute ``log p_n(x)`` for every unit bottom-up.

    Args:
        circuit: A valid circuit
        sample: Evidence with one entry per variable; ``MARGINALIZED`` or
            ``None`` entries are summed out

    Returns:
        Evaluation trace; its root entry is the (marginal) log-likelihood

    Raises:
        EvidenceError: On dimension mismatch or out-of-range category
    """
    sample = as_sample(sample)
    rows = sample.as_array()[None, :] if len(sample) else np.zeros((1, 0), dtype=np.int64)
    check_evidence(circuit.cardinalities, rows)
    logp = forward(circuit, rows)
    return EvalTrace(logp=logp[: circuit.num_units, 0].copy(), sample=sample, root=circuit.root)


def evaluate_batch(circuit: Circuit, dataset: Dataset) -> List[EvalTrace]:
    """
    Evaluate every row of a dataset; rows are processed in parallel chunks.

    Results equal per-sample ``evaluate`` bit for bit.
    """
    check_evidence(circuit.cardinalities, dataset.rows)
    blocks = map_chunks(lambda s, e: forward(circuit, dataset.rows[s:e]), len(dataset))
    traces: List[EvalTrace] = []
    for block in blocks:
        for offset in range(block.shape[1]):
            traces.append(
                EvalTrace(
                    logp=block[: circuit.num_units, offset].copy(),
                    sample=dataset.sample(len(traces)),
                    root=circuit.root,
                )
            )
    return traces


def root_log_likelihoods(circuit: Circuit, rows: np.ndarray) -> np.ndarray:
    """Root log-probability of every row, evaluated in parallel chunks"""
    check_evidence(circuit.cardinalities, rows)
    if rows.shape[0] == 0:
        return np.zeros(0)
    parts = map_chunks(lambda s, e: forward(circuit, rows[s:e])[circuit.root], rows.shape[0])
    return np.concatenate(parts)


def log_likelihood(circuit: Circuit, dataset: Dataset) -> float:
    """
    Mean log-likelihood over the rows of a dataset.

    Raises:
        DatasetError: If the dataset is empty
    """
    if len(dataset) == 0:
        raise DatasetError("Cannot compute the log-likelihood of an empty dataset")
    return float(np.mean(root_log_likelihoods(circuit, dataset.rows)))


def bits_per_dimension(circuit: Circuit, dataset: Dataset) -> float:
    """Negative mean log-likelihood in bits, divided by the number of variables"""
    return -log_likelihood(circuit, dataset) / (math.log(2) * circuit.num_vars)


def ll_to_bpd(mean_ll: float, num_vars: int) -> float:
    return -mean_ll / (math.log(2) * num_vars)
