"""Probabilistic circuit data model

A circuit is an immutable DAG of input, sum and product units stored in
topological order (every child id is smaller than its parent id). Sum
parameters live in log space; input units hold categorical distributions in
linear space.
"""

import hashlib
import logging
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .exceptions import StructureError

if TYPE_CHECKING:
    from .layers import LayerKernel, LayerPlan

logger = logging.getLogger(__name__)

MARGINALIZED = -1

# Normalization tolerance used by validation; parameter vectors off by more
# than RENORMALIZE_TOL are rejected on load.
NORMALIZATION_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


class UnitKind(IntEnum):
    """Kinds of circuit units"""
    INPUT = 0
    SUM = 1
    PRODUCT = 2


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Categorical distribution over one variable"""
    variable: int
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "probabilities", _frozen(self.probabilities))

    @property
    def cardinality(self) -> int:
        return int(self.probabilities.shape[0])

    @cached_property
    def log_probabilities(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return _frozen(np.log(self.probabilities))


@dataclass(frozen=True, eq=False)
class Unit:
    """
    One unit of a circuit.

    Input units carry a distribution, sum units carry children and one
    log-parameter per child, product units carry children only.
    """
    id: int
    kind: UnitKind
    scope: FrozenSet[int]
    children: Tuple[int, ...] = ()
    log_params: Optional[np.ndarray] = None
    distribution: Optional[InputDistribution] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(int(c) for c in self.children))
        if self.log_params is not None:
            object.__setattr__(self, "log_params", _frozen(self.log_params))

    @property
    def is_input(self) -> bool:
        return self.kind == UnitKind.INPUT

    @property
    def is_sum(self) -> bool:
        return self.kind == UnitKind.SUM

    @property
    def is_product(self) -> bool:
        return self.kind == UnitKind.PRODUCT

    @property
    def params(self) -> np.ndarray:
        """Linear-space sum parameters"""
        if self.log_params is None:
            raise StructureError(f"Unit {self.id} has no parameters", {"unit": self.id})
        return np.exp(self.log_params)


@dataclass(frozen=True)
class EdgeIndex:
    """
    Canonical enumeration of sum edges.

    Edges are ordered by parent id, then by position in the parent's child
    list. ``offsets[k]:offsets[k+1]`` is the edge range of ``sum_ids[k]``.
    """
    parent: np.ndarray
    child: np.ndarray
    log_param: np.ndarray
    sum_ids: np.ndarray
    offsets: np.ndarray

    def __len__(self) -> int:
        return int(self.parent.shape[0])

    @cached_property
    def lookup(self) -> Dict[Tuple[int, int], int]:
        return {(int(p), int(c)): e for e, (p, c) in enumerate(zip(self.parent, self.child))}

    @cached_property
    def range_of(self) -> Dict[int, Tuple[int, int]]:
        return {
            int(n): (int(self.offsets[k]), int(self.offsets[k + 1]))
            for k, n in enumerate(self.sum_ids)
        }

    def edge_id(self, parent: int, child: int) -> int:
        try:
            return self.lookup[(int(parent), int(child))]
        except KeyError:
            raise StructureError(
                f"No sum edge ({parent}, {child})", {"parent": parent, "child": child}
            ) from None

    def pairs(self) -> List[Tuple[int, int]]:
        return [(int(p), int(c)) for p, c in zip(self.parent, self.child)]


@dataclass(frozen=True, eq=False)
class Circuit:
    """
    Immutable probabilistic circuit.

    Attributes:
        units: Units in topological order; ``units[i].id == i``
        root: Id of the root unit
        cardinalities: Category count of every variable
    """
    units: Tuple[Unit, ...]
    root: int
    cardinalities: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        self._check_construction()

    def _check_construction(self) -> None:
        num_units = len(self.units)
        if num_units == 0:
            raise StructureError("Circuit has no units")
        if not 0 <= self.root < num_units:
            raise StructureError(f"Root id {self.root} out of range", {"unit": self.root})
        for position, unit in enumerate(self.units):
            if unit.id != position:
                raise StructureError(
                    f"Unit ids must be contiguous: found id {unit.id} at position {position}",
                    {"unit": unit.id},
                )
            if unit.is_input:
                dist = unit.distribution
                if dist is None or unit.children:
                    raise StructureError(f"Input unit {unit.id} is malformed", {"unit": unit.id})
                if not 0 <= dist.variable < self.num_vars:
                    raise StructureError(
                        f"Input unit {unit.id} refers to unknown variable {dist.variable}",
                        {"unit": unit.id},
                    )
                if dist.cardinality != self.cardinalities[dist.variable]:
                    raise StructureError(
                        f"Input unit {unit.id} has {dist.cardinality} categories, "
                        f"variable {dist.variable} has {self.cardinalities[dist.variable]}",
                        {"unit": unit.id},
                    )
                expected_scope = frozenset({dist.variable})
            else:
                if not unit.children:
                    raise StructureError(f"Unit {unit.id} has no children", {"unit": unit.id})
                if len(set(unit.children)) != len(unit.children):
                    raise StructureError(f"Unit {unit.id} lists a child twice", {"unit": unit.id})
                for child in unit.children:
                    if not 0 <= child < unit.id:
                        raise StructureError(
                            f"Unit {unit.id} is not topologically ordered (child {child})",
                            {"unit": unit.id, "child": child},
                        )
                if unit.is_sum:
                    if unit.log_params is None or unit.log_params.shape != (len(unit.children),):
                        raise StructureError(
                            f"Sum unit {unit.id} needs one parameter per child", {"unit": unit.id}
                        )
                    if np.isnan(unit.log_params).any():
                        raise StructureError(f"Sum unit {unit.id} has NaN parameters", {"unit": unit.id})
                expected_scope = frozenset().union(*(self.units[c].scope for c in unit.children))
            if unit.scope != expected_scope:
                raise StructureError(
                    f"Unit {unit.id} scope does not match its children", {"unit": unit.id}
                )

    @property
    def num_vars(self) -> int:
        return len(self.cardinalities)

    @property
    def num_units(self) -> int:
        return len(self.units)

    @property
    def size(self) -> int:
        """Number of sum edges, which is the number of parameters"""
        return len(self.edges)

    num_params = size

    def __len__(self) -> int:
        return self.num_units

    def __getitem__(self, unit_id: int) -> Unit:
        return self.units[unit_id]

    @cached_property
    def edges(self) -> EdgeIndex:
        parents: List[int] = []
        children: List[int] = []
        log_params: List[np.ndarray] = []
        sum_ids: List[int] = []
        offsets = [0]
        for unit in self.units:
            if unit.is_sum:
                sum_ids.append(unit.id)
                parents.extend([unit.id] * len(unit.children))
                children.extend(unit.children)
                log_params.append(unit.log_params)
                offsets.append(offsets[-1] + len(unit.children))
        return EdgeIndex(
            parent=np.asarray(parents, dtype=np.int64),
            child=np.asarray(children, dtype=np.int64),
            log_param=np.concatenate(log_params) if log_params else np.zeros(0),
            sum_ids=np.asarray(sum_ids, dtype=np.int64),
            offsets=np.asarray(offsets, dtype=np.int64),
        )

    @cached_property
    def parents(self) -> Tuple[Tuple[int, ...], ...]:
        found: List[List[int]] = [[] for _ in self.units]
        for unit in self.units:
            for child in unit.children:
                found[child].append(unit.id)
        return tuple(tuple(p) for p in found)

    @cached_property
    def reachable(self) -> FrozenSet[int]:
        """Ids of units reachable from the root"""
        seen = {self.root}
        stack = [self.root]
        while stack:
            for child in self.units[stack.pop()].children:
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return frozenset(seen)

    @cached_property
    def input_ids(self) -> Tuple[int, ...]:
        return tuple(u.id for u in self.units if u.is_input)

    @cached_property
    def layers(self) -> "LayerPlan":
        from .layers import build_layers

        return build_layers(self)

    @cached_property
    def kernels(self) -> Tuple["LayerKernel", ...]:
        from .layers import compile_layers

        return compile_layers(self)

    @cached_property
    def digest(self) -> str:
        """Content hash of the canonical binary form"""
        from storage.circuits import encode_binary

        return hashlib.sha256(encode_binary(self)).hexdigest()

    def linear_params(self) -> np.ndarray:
        """Sum parameters in edge order, linear space"""
        return np.exp(self.edges.log_param)

    def with_edge_log_params(self, log_params: np.ndarray) -> "Circuit":
        """Return a copy with new sum parameters given in edge order"""
        log_params = np.asarray(log_params, dtype=np.float64)
        if log_params.shape != (self.size,):
            raise StructureError(
                f"Expected {self.size} edge parameters, got {log_params.shape}"
            )
        ranges = self.edges.range_of
        units = []
        for unit in self.units:
            if unit.is_sum:
                start, end = ranges[unit.id]
                unit = Unit(unit.id, unit.kind, unit.scope, unit.children, log_params[start:end])
            units.append(unit)
        return Circuit(tuple(units), self.root, self.cardinalities)

    def with_input_probabilities(self, probabilities: Dict[int, np.ndarray]) -> "Circuit":
        """Return a copy with replaced input distributions keyed by unit id"""
        units = []
        for unit in self.units:
            if unit.id in probabilities:
                dist = InputDistribution(unit.distribution.variable, probabilities[unit.id])
                unit = Unit(unit.id, unit.kind, unit.scope, distribution=dist)
            units.append(unit)
        return Circuit(tuple(units), self.root, self.cardinalities)

    def describe(self) -> Dict[str, int]:
        kinds = [u.kind for u in self.units]
        return {
            "units": self.num_units,
            "inputs": kinds.count(UnitKind.INPUT),
            "sums": kinds.count(UnitKind.SUM),
            "products": kinds.count(UnitKind.PRODUCT),
            "edges": self.size,
            "vars": self.num_vars,
        }


class CircuitBuilder:
    """
    Incremental circuit construction in topological order.

    Example:
        builder = CircuitBuilder([2, 2])
        a = builder.bernoulli(0, 0.3)
        b = builder.bernoulli(1, 0.6)
        root = builder.product([a, b])
        circuit = builder.build(root)
    """

    def __init__(self, cardinalities: Sequence[int]):
        self.cardinalities = tuple(int(c) for c in cardinalities)
        self._units: List[Unit] = []

    def __len__(self) -> int:
        return len(self._units)

    def scope(self, unit_id: int) -> FrozenSet[int]:
        return self._units[unit_id].scope

    def unit(self, unit_id: int) -> Unit:
        return self._units[unit_id]

    def input(self, variable: int, probabilities: Iterable[float]) -> int:
        dist = InputDistribution(int(variable), np.asarray(list(probabilities), dtype=np.float64))
        uid = len(self._units)
        self._units.append(Unit(uid, UnitKind.INPUT, frozenset({int(variable)}), distribution=dist))
        return uid

    def bernoulli(self, variable: int, p: float) -> int:
        """Binary input with success probability ``p``, stored as [1-p, p]"""
        return self.input(variable, [1.0 - p, p])

    def product(self, children: Sequence[int]) -> int:
        children = tuple(int(c) for c in children)
        uid = len(self._units)
        scope = self._union(children)
        self._units.append(Unit(uid, UnitKind.PRODUCT, scope, children))
        return uid

    def sum(
        self,
        children: Sequence[int],
        params: Optional[Sequence[float]] = None,
        *,
        log_params: Optional[Sequence[float]] = None,
    ) -> int:
        children = tuple(int(c) for c in children)
        if log_params is None:
            if params is None:
                params = np.full(len(children), 1.0 / max(len(children), 1))
            with np.errstate(divide="ignore"):
                log_params = np.log(np.asarray(params, dtype=np.float64))
        uid = len(self._units)
        scope = self._union(children)
        self._units.append(
            Unit(uid, UnitKind.SUM, scope, children, np.asarray(log_params, dtype=np.float64))
        )
        return uid

    def add(self, unit: Unit) -> int:
        """Append a prepared unit, renumbered to the next id"""
        uid = len(self._units)
        if unit.is_input:
            self._units.append(Unit(uid, unit.kind, unit.scope, distribution=unit.distribution))
        else:
            self._units.append(Unit(uid, unit.kind, unit.scope, unit.children, unit.log_params))
        return uid

    def _union(self, children: Tuple[int, ...]) -> FrozenSet[int]:
        for child in children:
            if not 0 <= child < len(self._units):
                raise StructureError(f"Unknown child id {child}", {"child": child})
        return frozenset().union(*(self._units[c].scope for c in children))

    def build(self, root: Optional[int] = None) -> Circuit:
        if root is None:
            root = len(self._units) - 1
        return Circuit(tuple(self._units), int(root), self.cardinalities)


def normalize_log(log_params: np.ndarray) -> np.ndarray:
    """Renormalize a log-parameter vector so its exponentials sum to one"""
    log_params = np.asarray(log_params, dtype=np.float64)
    return log_params - logsumexp(log_params)


def compact(circuit: Circuit) -> Tuple[Circuit, Dict[int, int]]:
    """
    Drop units not reachable from the root and renumber.

    Relative order of surviving units is preserved, so the result stays
    topologically ordered.

    Returns:
        The compacted circuit and the old-to-new id mapping
    """
    kept = circuit.reachable
    old2new: Dict[int, int] = {}
    units: List[Unit] = []
    for unit in circuit.units:
        if unit.id not in kept:
            continue
        new_id = len(units)
        old2new[unit.id] = new_id
        if unit.is_input:
            units.append(Unit(new_id, unit.kind, unit.scope, distribution=unit.distribution))
        else:
            children = tuple(old2new[c] for c in unit.children)
            units.append(Unit(new_id, unit.kind, unit.scope, children, unit.log_params))
    dropped = circuit.num_units - len(units)
    if dropped:
        logger.debug(f"Compaction dropped {dropped} unreachable units")
    return Circuit(tuple(units), old2new[circuit.root], circuit.cardinalities), old2new
