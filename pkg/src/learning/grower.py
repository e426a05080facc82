"""Growing: duplicate every unit and perturb the copied sum parameters"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from circuit.exceptions import GrowError
from circuit.model import Circuit, Unit, UnitKind, compact, normalize_log

logger = logging.getLogger(__name__)

# Multiplicative noise at or below zero is replaced by this value.
MIN_NOISE = 1e-3


@dataclass(frozen=True)
class GrowConfig:
    """
    Attributes:
        sigma2: Variance of the multiplicative noise ``eps ~ N(1, sigma2)``
        seed: Noise seed
    """
    sigma2: float = 0.1
    seed: int = 0


def grown_size(circuit: Circuit) -> int:
    """
    Parameter count ``grow`` produces for ``circuit``, without growing it.

    Every sum edge becomes four edges, except that a sum whose second copy
    is unreachable from the kept root contributes only its first copy's
    ``2k`` edges. A second copy stays reachable when some parent is a sum
    (sums mix both versions of their children) or some product parent's
    second copy is reachable. The root's second copy is never reachable.
    """
    live = circuit.reachable
    second = [False] * circuit.num_units
    for unit in reversed(circuit.units):
        if unit.id == circuit.root or unit.id not in live:
            continue
        second[unit.id] = any(
            circuit.units[p].is_sum or second[p] for p in circuit.parents[unit.id] if p in live
        )
    size = 0
    for unit in circuit.units:
        if unit.is_sum and unit.id in live:
            size += (4 if second[unit.id] else 2) * len(unit.children)
    return size


def grow(circuit: Circuit, config: GrowConfig) -> Circuit:
    """
    Double a circuit.

    Every unit ``n`` gets two versions ``n0`` and ``n1``. Inputs are copied
    as-is; product ``n_i`` joins the ``i``-th versions of its children; both
    versions of a sum ``n`` mix all versions of its children with parameters
    ``normalize([theta, theta]) * eps`` renormalized, using independent noise
    per version. The result is rooted at the first version of the old root;
    units only the second root version reached are dropped.

    Args:
        circuit: Circuit to grow
        config: Noise variance and seed

    Raises:
        GrowError: If ``sigma2`` is negative
    """
    if config.sigma2 < 0:
        raise GrowError(f"Noise variance must be non-negative, got {config.sigma2}", {"sigma2": config.sigma2})
    rng = np.random.default_rng(config.seed)
    scale = math.sqrt(config.sigma2)

    units: List[Unit] = []
    old2new: Dict[int, Tuple[int, int]] = {}
    clamped = 0

    for unit in circuit.units:
        first, second = len(units), len(units) + 1
        old2new[unit.id] = (first, second)
        if unit.is_input:
            for uid in (first, second):
                units.append(Unit(uid, UnitKind.INPUT, unit.scope, distribution=unit.distribution))
        elif unit.is_product:
            for version, uid in enumerate((first, second)):
                children = tuple(old2new[c][version] for c in unit.children)
                units.append(Unit(uid, UnitKind.PRODUCT, unit.scope, children))
        else:
            children = tuple(old2new[c][0] for c in unit.children) + tuple(
                old2new[c][1] for c in unit.children
            )
            doubled = normalize_log(np.concatenate([unit.log_params, unit.log_params]))
            for uid in (first, second):
                if scale > 0:
                    eps = rng.normal(1.0, scale, size=doubled.size)
                    clamped += int((eps <= 0).sum())
                    eps = np.where(eps <= 0, MIN_NOISE, eps)
                    log_params = normalize_log(doubled + np.log(eps))
                else:
                    log_params = doubled
                units.append(Unit(uid, UnitKind.SUM, unit.scope, children, log_params))

    if clamped:
        logger.warning(f"Clamped {clamped} non-positive noise draws to {MIN_NOISE}")
    doubled_circuit = Circuit(tuple(units), old2new[circuit.root][0], circuit.cardinalities)
    grown, _ = compact(doubled_circuit)
    removed = doubled_circuit.num_units - grown.num_units
    if removed:
        logger.info(f"Grow dropped {removed} units unreachable from the kept root")
    logger.info(f"Grew circuit from {circuit.size} to {grown.size} parameters (sigma2={config.sigma2})")
    return grown
