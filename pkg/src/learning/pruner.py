"""Edge pruning and the log-likelihood drop it causes

Edges are scored by a heuristic, the lowest-scoring fraction is removed,
surviving sum parameters are renormalized per parent and units no longer
reachable from the root are dropped. The exact drop of a single edge and the
bound/approximation of a multi-edge drop are computed from circuit flows.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import yaml

from circuit.dataset import Dataset
from circuit.evaluation import log_likelihood
from circuit.exceptions import BoundHypothesisError, PruneError
from circuit.flows import FlowTable, aggregate_flows, row_flows, top_down
from circuit.model import NORMALIZATION_TOL, Circuit, CircuitBuilder, Unit, compact, normalize_log

from .grower import grown_size

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

# Accepted distance between the grown size and a growth target.
GROWTH_TOLERANCE = 2
MAX_GROWTH_ROUNDS = 8


class PruneHeuristic(str, Enum):
    """Edge scoring heuristics; lower scores are pruned first"""
    ERAND = "rand"
    EPARAM = "param"
    EFLOW = "flow"
    EPROB = "prob"


@dataclass(frozen=True)
class DropBound:
    """
    Upper bound and first-order approximation of a multi-edge drop.

    ``applicable`` is False when some row's pruned flow mass reaches 1; those
    rows are listed in ``violating_rows`` and ``upper_bound`` is infinite.
    """
    upper_bound: float
    approximation: float
    applicable: bool = True
    violating_rows: Tuple[int, ...] = ()


@dataclass
class PruneReport:
    """
    Outcome of one pruning step.

    Attributes:
        heuristic: Heuristic that ranked the edges (``None`` for an explicit set)
        fraction: Requested fraction ``k``
        pruned_edges: Removed ``(parent, child)`` pairs, ids of the input circuit
        kept_fraction: Parameter count after pruning over the count before
        exemptions: Edges skipped because removing them would empty a sum unit
        orphaned_edges: Sum edges lost because a removal left their parent unreachable
        exact_drop_per_edge: Single-edge drop of every pruned edge, when requested
        bounded_drop: Upper bound on the drop of the whole set
        approx_drop: Mean pruned flow over the scoring rows
        bound_applicable: Whether every row satisfied the bound's hypothesis
        violating_rows: Rows whose pruned flow mass reached 1
    """
    heuristic: Optional[str]
    fraction: float
    pruned_edges: List[Edge]
    kept_fraction: float
    exemptions: int = 0
    orphaned_edges: int = 0
    exact_drop_per_edge: Optional[List[float]] = None
    bounded_drop: Optional[float] = None
    approx_drop: Optional[float] = None
    bound_applicable: Optional[bool] = None
    violating_rows: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["pruned_edges"] = [[int(p), int(c)] for p, c in self.pruned_edges]
        return data

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def score_edges(
    circuit: Circuit,
    heuristic: PruneHeuristic,
    flows: Optional[FlowTable] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    Score every sum edge, in the circuit's edge order.

    Args:
        circuit: Circuit to score
        heuristic: Scoring rule
        flows: Aggregate flows over the scoring dataset (``EFLOW`` only)
        seed: Random seed (``ERAND`` only)

    Raises:
        PruneError: If ``EFLOW`` lacks a flow table matching the circuit's edges
    """
    heuristic = PruneHeuristic(heuristic)
    if heuristic == PruneHeuristic.EPARAM:
        return circuit.linear_params()
    if heuristic == PruneHeuristic.EFLOW:
        if flows is None:
            raise PruneError("Flow heuristic needs an aggregate flow table")
        if flows.edge_flow.shape != (circuit.size,):
            raise PruneError(
                f"Flow table has {flows.edge_flow.shape[0]} edges, circuit has {circuit.size}",
                {"table_edges": int(flows.edge_flow.shape[0]), "circuit_edges": circuit.size},
            )
        return flows.edge_flow.copy()
    if heuristic == PruneHeuristic.EPROB:
        return top_down(circuit).edge_prob
    return np.random.default_rng(seed).random(circuit.size)


@dataclass
class Selection:
    """
    Edges chosen for removal.

    Attributes:
        edges: Explicitly removed ``(parent, child)`` pairs, in rank order
        exemptions: Edges skipped because removing them would empty a sum unit
        orphaned: Sum edges lost because their parent became unreachable
        kept: Sum edges left reachable from the root
    """
    edges: List[Edge]
    exemptions: int
    orphaned: int
    kept: int


class _Reachability:
    """Sum edges still reachable from the root as edges are removed"""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.live = set(circuit.reachable)
        self.in_degree = [0] * circuit.num_units
        for n in self.live:
            for child in circuit.units[n].children:
                self.in_degree[child] += 1
        self.removed: Set[Edge] = set()
        self.remaining = {
            int(n): len(circuit.units[n].children) for n in circuit.edges.sum_ids if int(n) in self.live
        }
        self.size = sum(self.remaining.values())

    def cascade(self, parent: int, child: int) -> Tuple[List[int], Dict[int, int], int]:
        """Units that die, in-degree decrements and sum edges lost if ``(parent, child)`` goes"""
        dec: Dict[int, int] = {child: 1}
        dead: List[int] = []
        lost = 0
        stack = [child] if self.in_degree[child] == 1 else []
        while stack:
            unit = self.circuit.units[stack.pop()]
            dead.append(unit.id)
            for c in unit.children:
                if (unit.id, c) in self.removed:
                    continue
                if unit.is_sum:
                    lost += 1
                dec[c] = dec.get(c, 0) + 1
                if dec[c] == self.in_degree[c]:
                    stack.append(c)
        return dead, dec, lost

    def remove(self, parent: int, child: int, dead: List[int], dec: Dict[int, int], lost: int) -> None:
        for unit_id, count in dec.items():
            self.in_degree[unit_id] -= count
        self.live.difference_update(dead)
        self.removed.add((parent, child))
        self.remaining[parent] -= 1
        self.size -= 1 + lost


def select_edges(circuit: Circuit, scores: np.ndarray, keep: int) -> Selection:
    """
    Remove the lowest-scoring edges until ``keep`` sum edges remain reachable.

    Ties are broken by ``(parent, child)`` ascending. Removing an edge can
    orphan the child and with it every sum edge below that has no other
    route from the root; those edges count toward the target. An edge is
    skipped when it would leave its parent childless (an exemption), when
    its parent is already unreachable, or when its orphaned edges would take
    the circuit below ``keep``.
    """
    edges = circuit.edges
    order = np.lexsort((edges.child, edges.parent, scores))
    state = _Reachability(circuit)
    selected: List[Edge] = []
    exemptions = orphaned = 0
    for e in order:
        if state.size <= keep:
            break
        parent, child = int(edges.parent[e]), int(edges.child[e])
        if parent not in state.live:
            continue
        if state.remaining[parent] == 1:
            exemptions += 1
            continue
        dead, dec, lost = state.cascade(parent, child)
        if state.size - 1 - lost < keep:
            continue
        state.remove(parent, child, dead, dec, lost)
        selected.append((parent, child))
        orphaned += lost
    return Selection(selected, exemptions, orphaned, state.size)


def prune_edges(circuit: Circuit, edges: Iterable[Edge], renormalize: bool = True) -> Circuit:
    """
    Remove an explicit set of sum edges.

    Args:
        circuit: Circuit to prune
        edges: ``(parent, child)`` pairs; each must be a sum edge
        renormalize: Divide surviving parameters by their remaining mass

    Raises:
        PruneError: If the set would leave a sum unit without children
    """
    removed: Dict[int, set] = {}
    for parent, child in edges:
        circuit.edges.edge_id(parent, child)
        removed.setdefault(int(parent), set()).add(int(child))
    if not removed:
        return circuit

    units: List[Unit] = []
    for unit in circuit.units:
        drop = removed.get(unit.id)
        if drop:
            keep = [i for i, c in enumerate(unit.children) if c not in drop]
            if not keep:
                raise PruneError(f"Pruning would empty sum unit {unit.id}", {"unit": unit.id})
            log_params = unit.log_params[keep]
            if renormalize:
                log_params = normalize_log(log_params)
            unit = Unit(unit.id, unit.kind, unit.scope, tuple(unit.children[i] for i in keep), log_params)
        units.append(unit)
    pruned, _ = compact(Circuit(tuple(units), circuit.root, circuit.cardinalities))
    return pruned


def _fit_growth(
    circuit: Circuit, scores: np.ndarray, keep: int, target: int, renormalize: bool
) -> Tuple[Selection, Circuit]:
    # grown size is about 4 * kept, so each round moves the kept size by a quarter of the gap
    tried: Dict[int, Tuple[int, Selection, Circuit]] = {}
    while keep not in tried and len(tried) < MAX_GROWTH_ROUNDS:
        selection = select_edges(circuit, scores, keep)
        pruned = prune_edges(circuit, selection.edges, renormalize=renormalize)
        gap = grown_size(pruned) - target
        tried[keep] = (abs(gap), selection, pruned)
        if abs(gap) <= GROWTH_TOLERANCE:
            break
        step = int(math.copysign(max(1, round(abs(gap) / 4)), gap))
        keep = min(max(1, keep - step), circuit.size)
    _, selection, pruned = min(tried.values(), key=lambda t: t[0])
    return selection, pruned


def prune(
    circuit: Circuit,
    heuristic: PruneHeuristic,
    fraction: float,
    flows: Optional[FlowTable] = None,
    dataset: Optional[Dataset] = None,
    seed: int = 0,
    renormalize: bool = True,
    report_bounds: bool = False,
    growth_target: Optional[int] = None,
) -> Tuple[Circuit, PruneReport]:
    """
    Prune the lowest-scoring sum edges until ``ceil((1 - fraction) * |C|)`` remain.

    Edges orphaned by a removal count toward the fraction, so the pruned
    circuit has ``|C| - floor(fraction * |C|)`` parameters unless exemptions
    stop the selection early. ``report.pruned_edges`` lists the explicitly
    removed edges and ``report.orphaned_edges`` the count lost with them.

    With ``growth_target`` the kept size is adjusted instead so that growing
    the pruned circuit yields ``growth_target`` parameters, within
    ``GROWTH_TOLERANCE`` when reachable. Pruning 75% and growing back to the
    original count is the structure-learning step.

    Args:
        circuit: Circuit to prune
        heuristic: Edge scoring rule
        fraction: Fraction ``k`` of edges to remove, in ``(0, 1)``
        flows: Aggregate flows for ``EFLOW``; computed from ``dataset`` when omitted
        dataset: Scoring rows; needed for ``EFLOW`` without ``flows`` and for
            drop reporting
        seed: Random seed for ``ERAND``
        renormalize: Renormalize surviving parameters per parent
        report_bounds: Add exact per-edge drops and the multi-edge bound to the
            report (needs ``dataset``)
        growth_target: Parameter count the pruned circuit should grow back to

    Returns:
        The pruned circuit and its report

    Raises:
        PruneError: If ``fraction`` is outside ``(0, 1)`` or the circuit has
            fewer than two sum edges
    """
    heuristic = PruneHeuristic(heuristic)
    if not 0.0 < fraction < 1.0:
        raise PruneError(f"Prune fraction must lie in (0, 1), got {fraction}", {"fraction": fraction})
    if circuit.size < 2:
        raise PruneError(f"Circuit has {circuit.size} sum edges; need at least 2", {"edges": circuit.size})
    if heuristic == PruneHeuristic.EFLOW and flows is None:
        if dataset is None:
            raise PruneError("Flow heuristic needs flows or a dataset")
        flows = aggregate_flows(circuit, dataset)

    keep = circuit.size - int(math.floor(fraction * circuit.size))
    scores = score_edges(circuit, heuristic, flows=flows, seed=seed)
    if growth_target is None:
        selection = select_edges(circuit, scores, keep)
        pruned = prune_edges(circuit, selection.edges, renormalize=renormalize)
    else:
        selection, pruned = _fit_growth(circuit, scores, keep, growth_target, renormalize)
    selected = selection.edges

    report = PruneReport(
        heuristic=heuristic.value,
        fraction=fraction,
        pruned_edges=selected,
        kept_fraction=pruned.size / circuit.size,
        exemptions=selection.exemptions,
        orphaned_edges=selection.orphaned,
    )
    if flows is not None and flows.sample_count:
        ids = [circuit.edges.edge_id(p, c) for p, c in selected]
        report.approx_drop = float(flows.edge_flow[ids].sum() / flows.sample_count)
    if report_bounds and dataset is not None:
        _, unit_flow, edge_flow = row_flows(circuit, dataset)
        report.exact_drop_per_edge = [
            _single_edge_drop(circuit, edge, unit_flow, edge_flow) for edge in selected
        ]
        bound = _drop_bound(circuit, selected, edge_flow)
        report.bounded_drop = bound.upper_bound
        report.approx_drop = bound.approximation
        report.bound_applicable = bound.applicable
        report.violating_rows = list(bound.violating_rows)
        if not bound.applicable:
            logger.warning(f"Drop bound inapplicable on {len(bound.violating_rows)} rows")

    if selection.exemptions:
        logger.info(f"Pruning skipped {selection.exemptions} edges that would empty a sum unit")
    if growth_target is None and pruned.size > keep:
        logger.warning(f"Pruning stopped at {pruned.size} edges, above the target of {keep}")
    logger.info(
        f"Pruned {len(selected)} of {circuit.size} edges with {heuristic.value}, "
        f"{selection.orphaned} more orphaned ({circuit.num_units} -> {pruned.num_units} units)"
    )
    return pruned, report


def _single_edge_drop(
    circuit: Circuit, edge: Edge, unit_flow: np.ndarray, edge_flow: np.ndarray
) -> float:
    parent, child = edge
    if len(circuit.units[parent].children) < 2:
        raise PruneError(f"Edge {edge} is the only child of its sum unit", {"parent": parent})
    e = circuit.edges.edge_id(parent, child)
    theta = math.exp(float(circuit.edges.log_param[e]))
    remaining = 1.0 - theta
    with np.errstate(divide="ignore"):
        per_row = np.log(remaining) - np.log(remaining + theta * unit_flow[parent] - edge_flow[e])
    return float(per_row.mean()) if per_row.size else 0.0


def exact_single_edge_drop(circuit: Circuit, edge: Edge, dataset: Dataset) -> float:
    """
    Exact ``LL(original) - LL(pruned)`` for removing one edge with renormalization.

    Computed from the flows of the original circuit only; no pruned circuit is
    built.

    Raises:
        ZeroLikelihoodError: If a row has zero likelihood
        PruneError: If the edge is its parent's only child
    """
    _, unit_flow, edge_flow = row_flows(circuit, dataset)
    return _single_edge_drop(circuit, edge, unit_flow, edge_flow)


def _drop_bound(circuit: Circuit, edges: Sequence[Edge], edge_flow: np.ndarray) -> DropBound:
    num_rows = edge_flow.shape[1]
    if not edges or num_rows == 0:
        return DropBound(0.0, 0.0)
    ids = [circuit.edges.edge_id(p, c) for p, c in edges]
    mass = edge_flow[ids].sum(axis=0)
    approximation = float(mass.sum() / num_rows)
    violating = tuple(int(r) for r in np.flatnonzero(mass >= 1.0))
    if violating:
        return DropBound(math.inf, approximation, applicable=False, violating_rows=violating)
    return DropBound(float(-np.log1p(-mass).mean()), approximation)


def multi_edge_drop_bound(
    circuit: Circuit, edges: Sequence[Edge], dataset: Dataset
) -> Tuple[float, float]:
    """
    Bound and approximate the drop of removing a set of edges.

    The bound is ``-mean_x log(1 - sum_E F_{n,c}(x))``; the approximation is the
    mean pruned flow ``sum_E F_{n,c}(D) / |D|``.

    Returns:
        ``(upper_bound, approximation)``

    Raises:
        BoundHypothesisError: If some row's pruned flow mass is 1 or more
    """
    _, _, edge_flow = row_flows(circuit, dataset)
    bound = _drop_bound(circuit, edges, edge_flow)
    if not bound.applicable:
        raise BoundHypothesisError(
            f"Pruned flow mass reaches 1 on {len(bound.violating_rows)} rows",
            rows=list(bound.violating_rows),
        )
    return bound.upper_bound, bound.approximation


def actual_drop(circuit: Circuit, pruned: Circuit, dataset: Dataset) -> float:
    """``LL(original) - LL(pruned)`` by direct evaluation of both circuits"""
    return log_likelihood(circuit, dataset) - log_likelihood(pruned, dataset)


def simplify(circuit: Circuit) -> Circuit:
    """
    Contract pass-through units.

    A unit with a single child is replaced by that child. A product feeding a
    product has its children spliced into the parent; a sum feeding a sum is
    merged into the parent with multiplied weights. Unreachable units are
    dropped and ids renumbered. The distribution is unchanged.
    """
    builder = CircuitBuilder(circuit.cardinalities)
    rep: Dict[int, int] = {}
    for unit in circuit.units:
        if unit.is_input:
            rep[unit.id] = builder.add(unit)
            continue
        if unit.is_product:
            children: List[int] = []
            for child in unit.children:
                target = builder.unit(rep[child])
                children.extend(target.children if target.is_product else (target.id,))
            rep[unit.id] = children[0] if len(children) == 1 else builder.product(children)
            continue

        weights: Dict[int, float] = {}
        for child, theta in zip(unit.children, np.exp(unit.log_params)):
            target = builder.unit(rep[child])
            if target.is_sum:
                for grandchild, w in zip(target.children, np.exp(target.log_params)):
                    weights[grandchild] = weights.get(grandchild, 0.0) + theta * w
            else:
                weights[target.id] = weights.get(target.id, 0.0) + theta
        if len(weights) == 1 and abs(next(iter(weights.values())) - 1.0) <= NORMALIZATION_TOL:
            rep[unit.id] = next(iter(weights))
        else:
            with np.errstate(divide="ignore"):
                rep[unit.id] = builder.sum(list(weights), log_params=np.log(list(weights.values())))
    simplified, _ = compact(builder.build(rep[circuit.root]))
    logger.debug(f"Simplified {circuit.num_units} -> {simplified.num_units} units")
    return simplified


@dataclass(frozen=True)
class CurvePoint:
    """One heuristic/fraction cell of a pruning curve"""
    heuristic: str
    fraction: float
    num_params: int
    mean_ll: float
    approx_drop: float
    actual_drop: float


def pruning_curve(
    circuit: Circuit,
    dataset: Dataset,
    heuristics: Sequence[PruneHeuristic],
    fractions: Sequence[float],
    seed: int = 0,
) -> List[CurvePoint]:
    """
    Compare heuristics across pruning fractions on one dataset.

    Flows are aggregated once on ``dataset`` and reused for every cell.
    """
    flows = aggregate_flows(circuit, dataset)
    base = log_likelihood(circuit, dataset)
    points: List[CurvePoint] = []
    for heuristic in heuristics:
        for fraction in fractions:
            pruned, report = prune(circuit, heuristic, fraction, flows=flows, seed=seed)
            mean_ll = log_likelihood(pruned, dataset)
            points.append(
                CurvePoint(
                    heuristic=PruneHeuristic(heuristic).value,
                    fraction=float(fraction),
                    num_params=pruned.size,
                    mean_ll=mean_ll,
                    approx_drop=float(report.approx_drop or 0.0),
                    actual_drop=base - mean_ll,
                )
            )
    return points
