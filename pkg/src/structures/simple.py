"""Small reference structures and random circuits"""

import logging
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np

from circuit.model import Circuit, CircuitBuilder, compact

logger = logging.getLogger(__name__)


def _uniform(cardinality: int) -> np.ndarray:
    return np.full(cardinality, 1.0 / cardinality)


def fully_factorized(
    cardinalities: Sequence[int], probabilities: Optional[Sequence[Sequence[float]]] = None
) -> Circuit:
    """Product of one leaf per variable (uniform leaves by default)"""
    builder = CircuitBuilder(cardinalities)
    leaves = [
        builder.input(v, probabilities[v] if probabilities is not None else _uniform(c))
        for v, c in enumerate(cardinalities)
    ]
    return builder.build(builder.product(leaves))


def dense_mixture(cardinalities: Sequence[int], components: int, seed: int = 0) -> Circuit:
    """Mixture of ``components`` fully factorized distributions with random parameters"""
    rng = np.random.default_rng(seed)
    builder = CircuitBuilder(cardinalities)
    products = [
        builder.product([builder.input(v, rng.dirichlet(np.ones(c))) for v, c in enumerate(cardinalities)])
        for _ in range(components)
    ]
    return builder.build(builder.sum(products, rng.dirichlet(np.ones(components))))


def uniform_circuit(cardinalities: Sequence[int], components: int = 2) -> Circuit:
    """Uniform distribution written as an evenly weighted mixture of uniform products"""
    builder = CircuitBuilder(cardinalities)
    products = [
        builder.product([builder.input(v, _uniform(c)) for v, c in enumerate(cardinalities)])
        for _ in range(components)
    ]
    return builder.build(builder.sum(products))


def point_mass(values: Sequence[int], cardinalities: Sequence[int]) -> Circuit:
    """
    Distribution concentrated on one assignment.

    The root mixes the point with a second, shifted point at weight zero so
    the circuit still has sum parameters.
    """
    builder = CircuitBuilder(cardinalities)
    components = []
    for shift in (0, 1):
        leaves = []
        for v, (value, cardinality) in enumerate(zip(values, cardinalities)):
            probabilities = np.zeros(cardinality)
            probabilities[(value + shift) % cardinality] = 1.0
            leaves.append(builder.input(v, probabilities))
        components.append(builder.product(leaves))
    return builder.build(builder.sum(components, [1.0, 0.0]))


def random_circuit(
    cardinalities: Sequence[int],
    seed: int = 0,
    max_children: int = 3,
    reuse: float = 0.3,
    root: str = "sum",
) -> Circuit:
    """
    Random smooth, decomposable, alternating circuit.

    Sums get between 2 and ``max_children`` children; products split their
    scope into two random halves. With probability ``reuse`` an existing sum
    over the same scope is shared instead of built, so the result is a DAG
    rather than a tree. All parameters are Dirichlet(1) draws.

    Args:
        cardinalities: Category count per variable
        seed: Random seed
        max_children: Largest sum fan-in
        reuse: Probability of sharing an already built sum
        root: ``"sum"`` or ``"product"`` root unit
    """
    rng = np.random.default_rng(seed)
    builder = CircuitBuilder(cardinalities)
    built: Dict[FrozenSet[int], List[int]] = {}

    def leaf(var: int) -> int:
        return builder.input(var, rng.dirichlet(np.ones(cardinalities[var])))

    def split(scope: List[int]) -> List[List[int]]:
        order = list(rng.permutation(scope))
        cut = int(rng.integers(1, len(order)))
        return [sorted(int(v) for v in order[:cut]), sorted(int(v) for v in order[cut:])]

    def product(scope: List[int]) -> int:
        return builder.product([node(part) for part in split(scope)])

    def node(scope: List[int]) -> int:
        key = frozenset(scope)
        shared = built.get(key, [])
        if shared and rng.random() < reuse:
            return shared[int(rng.integers(len(shared)))]
        fan_in = int(rng.integers(2, max_children + 1))
        if len(scope) == 1:
            children = [leaf(scope[0]) for _ in range(fan_in)]
        else:
            children = [product(scope) for _ in range(fan_in)]
        uid = builder.sum(children, rng.dirichlet(np.ones(fan_in)))
        built.setdefault(key, []).append(uid)
        return uid

    variables = list(range(len(cardinalities)))
    if root == "product" and len(variables) > 1:
        top = product(variables)
    else:
        top = node(variables)
    circuit, _ = compact(builder.build(top))
    return circuit
