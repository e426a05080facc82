"""Structural validation of circuits"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np

from .model import NORMALIZATION_TOL, Circuit

logger = logging.getLogger(__name__)


class Rule(str, Enum):
    """Structural properties checked by ``validate``"""
    DECOMPOSABILITY = "decomposability"
    SMOOTHNESS = "smoothness"
    NORMALIZATION = "normalization"
    ALTERNATION = "alternation"
    INPUT_DISTRIBUTION = "input-distribution"
    REACHABILITY = "reachability"


@dataclass(frozen=True)
class StructureViolation:
    """One failed structural property, attached to the offending unit"""
    unit: int
    rule: Rule
    message: str

    def __str__(self) -> str:
        return f"unit {self.unit}: {self.rule.value}: {self.message}"


def validate(circuit: Circuit) -> List[StructureViolation]:
    """
    Check that a circuit is smooth, decomposable, normalized and alternating.

    Ids being topologically ordered (hence acyclic) and scopes matching their
    children are enforced when a ``Circuit`` is constructed, so they cannot
    fail here.

    Args:
        circuit: Circuit to check

    Returns:
        Violations in unit order; empty when the circuit is valid
    """
    violations: List[StructureViolation] = []
    reachable = circuit.reachable

    for unit in circuit.units:
        if unit.id not in reachable:
            violations.append(
                StructureViolation(unit.id, Rule.REACHABILITY, "not reachable from the root")
            )

        if unit.is_input:
            probabilities = unit.distribution.probabilities
            if (probabilities < 0).any() or not np.isfinite(probabilities).all():
                violations.append(
                    StructureViolation(unit.id, Rule.INPUT_DISTRIBUTION, "negative or non-finite probability")
                )
            elif abs(probabilities.sum() - 1.0) > NORMALIZATION_TOL:
                violations.append(
                    StructureViolation(
                        unit.id,
                        Rule.INPUT_DISTRIBUTION,
                        f"probabilities sum to {probabilities.sum():.12g}",
                    )
                )
            continue

        children = [circuit.units[c] for c in unit.children]
        if unit.is_product:
            seen: set = set()
            for child in children:
                if seen & child.scope:
                    violations.append(
                        StructureViolation(
                            unit.id,
                            Rule.DECOMPOSABILITY,
                            f"child {child.id} shares variables {sorted(seen & child.scope)}",
                        )
                    )
                    break
                seen |= child.scope
        else:
            scope = children[0].scope
            for child in children[1:]:
                if child.scope != scope:
                    violations.append(
                        StructureViolation(
                            unit.id,
                            Rule.SMOOTHNESS,
                            f"child {child.id} scope {sorted(child.scope)} differs from {sorted(scope)}",
                        )
                    )
                    break
            total = float(np.exp(unit.log_params).sum())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                violations.append(
                    StructureViolation(unit.id, Rule.NORMALIZATION, f"parameters sum to {total:.12g}")
                )

        for child in children:
            if child.kind == unit.kind:
                violations.append(
                    StructureViolation(
                        unit.id,
                        Rule.ALTERNATION,
                        f"{unit.kind.name.lower()} unit feeds from {child.kind.name.lower()} unit {child.id}",
                    )
                )
                break

    if violations:
        logger.debug(f"Validation found {len(violations)} violations")
    return violations


def is_valid(circuit: Circuit) -> bool:
    return not validate(circuit)
