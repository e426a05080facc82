"""Unconditional top-down sampling

Every row owns a counter-based random stream derived from ``(seed, row)``
and consumes exactly one uniform draw per unit, so a row's sample does not
depend on the chunking or thread that produced it.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from utils.cache import Cache, cached
from utils.parallel import map_chunks

from .dataset import Dataset, Sample
from .model import MARGINALIZED, Circuit

logger = logging.getLogger(__name__)

_tables = Cache(maxsize=32)


@dataclass(frozen=True, eq=False)
class SamplingTables:
    """
    Linear-space cumulative tables for inverse-CDF draws.

    Attributes:
        order: Reachable unit ids, parents before children
        cumulative: Per sum or input unit id, the cumulative distribution over
            its children or categories
    """
    order: Tuple[int, ...]
    cumulative: Dict[int, np.ndarray]


@cached(_tables, key_func=lambda circuit: circuit.digest)
def sampling_tables(circuit: Circuit) -> SamplingTables:
    cumulative: Dict[int, np.ndarray] = {}
    for unit in circuit.units:
        if unit.is_sum:
            weights = np.exp(unit.log_params)
        elif unit.is_input:
            weights = unit.distribution.probabilities
        else:
            continue
        cdf = np.cumsum(weights)
        cumulative[unit.id] = cdf / cdf[-1]
    order = tuple(sorted(circuit.reachable, reverse=True))
    return SamplingTables(order=order, cumulative=cumulative)


def row_stream(seed: int, row: int) -> np.random.Generator:
    """Independent random stream of one row, keyed by the seed"""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(row)]))


def _draw(circuit: Circuit, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the top-down procedure for a block of rows.

    Args:
        circuit: Circuit to sample from
        uniforms: ``(num_rows, num_units)`` draws in ``[0, 1)``; column ``n``
            drives the choice made at unit ``n``

    Returns:
        ``(values, visited)``: the sampled rows and the ``(num_rows,
        num_units)`` visit matrix
    """
    tables = sampling_tables(circuit)
    num_rows = uniforms.shape[0]
    values = np.full((num_rows, circuit.num_vars), MARGINALIZED, dtype=np.int64)
    visited = np.zeros((circuit.num_units, num_rows), dtype=bool)
    visited[circuit.root] = True

    for uid in tables.order:
        rows = np.flatnonzero(visited[uid])
        if rows.size == 0:
            continue
        unit = circuit.units[uid]
        if unit.is_product:
            for child in unit.children:
                visited[child, rows] = True
            continue
        cdf = tables.cumulative[uid]
        picks = np.minimum(np.searchsorted(cdf, uniforms[rows, uid], side="right"), cdf.size - 1)
        if unit.is_sum:
            children = np.asarray(unit.children, dtype=np.int64)
            visited[children[picks], rows] = True
        else:
            values[rows, unit.distribution.variable] = picks
    return values, visited.T


def sample(circuit: Circuit, rng: np.random.Generator) -> Sample:
    """
    Draw one fully observed sample.

    Args:
        circuit: A valid circuit
        rng: Random stream; ``num_units`` uniforms are consumed
    """
    values, _ = _draw(circuit, rng.random(circuit.num_units)[None, :])
    return Sample(tuple(int(v) for v in values[0]))


def sample_batch(
    circuit: Circuit,
    count: int,
    seed: int,
    record_visits: bool = False,
    name: str = "samples",
) -> Union[Dataset, Tuple[Dataset, np.ndarray]]:
    """
    Draw ``count`` independent samples.

    Row ``i`` uses ``row_stream(seed, i)``, so the result is reproducible
    under any chunking.

    Args:
        circuit: A valid circuit
        count: Number of rows (0 returns an empty dataset)
        seed: Stream key
        record_visits: Also return the ``(count, num_units)`` boolean matrix
            of units visited while generating each row
        name: Dataset label

    Returns:
        The sampled dataset, plus the visit matrix when requested
    """
    def block(start: int, end: int) -> Tuple[np.ndarray, np.ndarray]:
        uniforms = np.stack([row_stream(seed, r).random(circuit.num_units) for r in range(start, end)])
        return _draw(circuit, uniforms)

    parts: List[Tuple[np.ndarray, np.ndarray]] = map_chunks(block, count)
    if parts:
        values = np.concatenate([p[0] for p in parts])
        visits = np.concatenate([p[1] for p in parts])
    else:
        values = np.zeros((0, circuit.num_vars), dtype=np.int64)
        visits = np.zeros((0, circuit.num_units), dtype=bool)
    logger.debug(f"Sampled {count} rows with seed {seed}")
    dataset = Dataset(values, circuit.cardinalities, name)
    if record_visits:
        return dataset, visits
    return dataset


def visit_frequencies(visits: np.ndarray) -> Optional[np.ndarray]:
    """Fraction of rows that visited each unit"""
    if visits.shape[0] == 0:
        return None
    return visits.mean(axis=0)
