"""Edge scoring, pruning and likelihood drop estimates"""

import math

import numpy as np
import pytest
import yaml

from circuit import BoundHypothesisError, Dataset, PruneError, validate
from circuit.evaluation import evaluate, log_likelihood, root_log_likelihoods
from circuit.flows import aggregate_flows, empty_flow_table, top_down
from circuit.sampler import sample_batch
from learning.pruner import (
    PruneHeuristic,
    actual_drop,
    exact_single_edge_drop,
    multi_edge_drop_bound,
    prune,
    prune_edges,
    pruning_curve,
    score_edges,
    select_edges,
    simplify,
)
from structures.hclt import build_hclt
from structures.simple import fully_factorized, point_mass, random_circuit
from utils.config import HcltConfig

from conftest import all_states


class TestScoring:
    def test_param_picks_smallest_weight(self, example):
        circuit = example.circuit
        scores = score_edges(circuit, PruneHeuristic.EPARAM)
        edges = select_edges(circuit, scores, circuit.size - 1).edges
        assert edges == [(example.s22, example.p21)]

    def test_flow_picks_smallest_flow(self, example, example_row):
        circuit = example.circuit
        flows = aggregate_flows(circuit, example_row)
        edges = select_edges(circuit, score_edges(circuit, PruneHeuristic.EFLOW, flows), circuit.size - 1).edges
        assert edges == [(example.s21, example.p22)]
        assert flows.edge(circuit, *edges[0]) == pytest.approx(0.0095953, abs=1e-7)

    def test_prob_scores_are_top_down(self, example):
        scores = score_edges(example.circuit, PruneHeuristic.EPROB)
        np.testing.assert_allclose(scores, top_down(example.circuit).edge_prob)

    def test_rand_is_seeded(self, example):
        first = score_edges(example.circuit, PruneHeuristic.ERAND, seed=3)
        second = score_edges(example.circuit, PruneHeuristic.ERAND, seed=3)
        np.testing.assert_array_equal(first, second)

    def test_flow_needs_table(self, example):
        with pytest.raises(PruneError):
            score_edges(example.circuit, PruneHeuristic.EFLOW)

    def test_flow_table_must_match(self, example):
        flows = empty_flow_table(fully_factorized([2, 2, 2, 2]))
        with pytest.raises(PruneError):
            score_edges(example.circuit, PruneHeuristic.EFLOW, flows)

    def test_ties_break_by_parent_then_child(self, example):
        selection = select_edges(example.circuit, np.zeros(example.circuit.size), example.circuit.size - 2)
        assert selection.edges == [(example.s21, example.p21), (example.s22, example.p21)]
        assert selection.exemptions == 1
        assert selection.kept == example.circuit.size - 2


class TestPrune:
    def test_param_prune_example(self, example, example_sample):
        pruned, report = prune(example.circuit, PruneHeuristic.EPARAM, 0.2)
        assert report.pruned_edges == [(example.s22, example.p21)]
        assert evaluate(pruned, example_sample).root_probability == pytest.approx(0.114264)
        assert abs(evaluate(pruned, example_sample).root_probability - 0.114) < 5e-4

    def test_flow_prune_example(self, example, example_sample, example_row):
        pruned, report = prune(example.circuit, PruneHeuristic.EFLOW, 0.2, dataset=example_row)
        assert report.pruned_edges == [(example.s21, example.p22)]
        assert evaluate(pruned, example_sample).root_probability == pytest.approx(0.146556)
        assert abs(evaluate(pruned, example_sample).root_probability - 0.147) < 5e-4

    def test_count_is_floor(self):
        circuit = random_circuit([2, 3, 2, 2, 3], seed=5)
        pruned, report = prune(circuit, PruneHeuristic.EPARAM, 0.3)
        removed = math.floor(0.3 * circuit.size)
        assert pruned.size == circuit.size - removed
        assert len(report.pruned_edges) + report.orphaned_edges == removed
        assert report.kept_fraction == pytest.approx(pruned.size / circuit.size)

    def test_orphaned_edges_count_toward_fraction(self, synthetic_data):
        _, train, _ = synthetic_data
        circuit = build_hclt(train, HcltConfig(hidden_states=4, seed=0))
        assert circuit.size == 84
        pruned, report = prune(circuit, PruneHeuristic.EFLOW, 0.75, dataset=train)
        assert pruned.size >= circuit.size - 63
        assert len(report.pruned_edges) + report.orphaned_edges == circuit.size - pruned.size
        assert validate(pruned) == []

    def test_orphaning_removal_is_skipped_near_target(self, example):
        # cutting (root, p11) would orphan s21 and both of its edges
        scores = np.ones(example.circuit.size)
        scores[example.circuit.edges.edge_id(example.root, example.p11)] = 0.0
        selection = select_edges(example.circuit, scores, example.circuit.size - 1)
        assert (example.root, example.p11) not in selection.edges
        assert selection.kept == example.circuit.size - 1
        assert selection.orphaned == 0

    def test_result_stays_valid(self):
        for seed in range(5):
            circuit = random_circuit([2, 3, 2, 2], seed=seed)
            pruned, _ = prune(circuit, PruneHeuristic.ERAND, 0.5, seed=seed)
            assert validate(pruned) == []

    def test_never_empties_a_sum(self, example):
        pruned, report = prune(example.circuit, PruneHeuristic.EPARAM, 0.9)
        assert report.pruned_edges == [(example.s22, example.p21), (example.s21, example.p22), (example.root, example.p11)]
        assert report.exemptions == 2
        assert report.orphaned_edges == 1
        assert pruned.size == 2
        assert all(len(u.children) == 1 for u in pruned.units if u.is_sum)

    def test_without_renormalization(self, example, example_sample):
        pruned = prune_edges(example.circuit, [(example.s22, example.p21)], renormalize=False)
        s22 = [u for u in pruned.units if u.is_sum and len(u.children) == 1]
        assert np.exp(s22[0].log_params) == pytest.approx([0.9])
        assert evaluate(pruned, example_sample).root_probability < 0.12006

    def test_unreachable_units_removed(self, example):
        pruned = prune_edges(example.circuit, [(example.root, example.p12)])
        assert pruned.num_units < example.circuit.num_units
        assert validate(pruned) == []

    def test_emptying_explicit_set(self, example):
        with pytest.raises(PruneError):
            prune_edges(example.circuit, [(example.s21, example.p21), (example.s21, example.p22)])

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_bad_fraction(self, example, fraction):
        with pytest.raises(PruneError):
            prune(example.circuit, PruneHeuristic.EPARAM, fraction)

    def test_too_small(self):
        with pytest.raises(PruneError):
            prune(fully_factorized([2, 2]), PruneHeuristic.EPARAM, 0.5)

    def test_flow_needs_data(self, example):
        with pytest.raises(PruneError):
            prune(example.circuit, PruneHeuristic.EFLOW, 0.5)

    def test_report_yaml(self, example, example_row):
        pruned, report = prune(
            example.circuit, PruneHeuristic.EFLOW, 0.2, dataset=example_row, report_bounds=True
        )
        data = yaml.safe_load(report.to_yaml())
        assert data["heuristic"] == "flow"
        assert data["pruned_edges"] == [[example.s21, example.p22]]
        assert data["bound_applicable"] is True
        assert data["orphaned_edges"] == 0
        assert data["exact_drop_per_edge"][0] == pytest.approx(actual_drop(example.circuit, pruned, example_row), abs=1e-9)


class TestDrops:
    def test_single_edge_matches_rebuild(self, example, example_row):
        edge = (example.s21, example.p22)
        drop = exact_single_edge_drop(example.circuit, edge, example_row)
        pruned = prune_edges(example.circuit, [edge])
        assert drop == pytest.approx(actual_drop(example.circuit, pruned, example_row), abs=1e-12)
        assert drop == pytest.approx(math.log(0.12006 / 0.146556), abs=1e-9)
        assert drop == pytest.approx(-0.1994, abs=1e-4)

    def test_single_edge_every_edge(self, synthetic_data):
        truth, train, _ = synthetic_data
        edges = truth.edges
        for e in range(0, truth.size, 3):
            parent, child = int(edges.parent[e]), int(edges.child[e])
            if len(truth.units[parent].children) < 2:
                continue
            pruned = prune_edges(truth, [(parent, child)])
            assert exact_single_edge_drop(truth, (parent, child), train) == pytest.approx(
                actual_drop(truth, pruned, train), abs=1e-9
            )

    def test_only_child_rejected(self, example, example_row):
        pruned = prune_edges(example.circuit, [(example.s21, example.p22)])
        s21 = next(u for u in pruned.units if u.is_sum and len(u.children) == 1)
        with pytest.raises(PruneError):
            exact_single_edge_drop(pruned, (s21.id, s21.children[0]), example_row)

    @pytest.mark.parametrize("renormalize", [True, False])
    def test_bound_holds(self, synthetic_data, renormalize):
        truth, train, _ = synthetic_data
        for fraction in (0.1, 0.2, 0.3):
            _, report = prune(truth, PruneHeuristic.EFLOW, fraction, dataset=train)
            try:
                bound, approx = multi_edge_drop_bound(truth, report.pruned_edges, train)
            except BoundHypothesisError:
                continue
            pruned = prune_edges(truth, report.pruned_edges, renormalize=renormalize)
            assert actual_drop(truth, pruned, train) <= bound + 1e-9
            assert approx == pytest.approx(report.approx_drop)

    def test_bound_hypothesis(self):
        circuit = point_mass([0, 1], [2, 2])
        data = Dataset(np.array([[0, 1]]), (2, 2))
        edge = circuit.edges.pairs()[0]
        with pytest.raises(BoundHypothesisError) as info:
            multi_edge_drop_bound(circuit, [edge], data)
        assert info.value.rows == [0]


class TestSimplify:
    def test_preserves_distribution(self, example, binary_states):
        pruned, _ = prune(example.circuit, PruneHeuristic.EPARAM, 0.9)
        simple = simplify(pruned)
        assert simple.num_units < pruned.num_units
        assert not any(u.is_sum and len(u.children) == 1 for u in simple.units)
        np.testing.assert_allclose(
            root_log_likelihoods(simple, binary_states.rows),
            root_log_likelihoods(pruned, binary_states.rows),
            atol=1e-12,
        )

    def test_random_circuit_unchanged(self):
        circuit = random_circuit([2, 3, 2], seed=6)
        states = all_states(circuit.cardinalities)
        np.testing.assert_allclose(
            root_log_likelihoods(simplify(circuit), states.rows),
            root_log_likelihoods(circuit, states.rows),
            atol=1e-12,
        )


class TestCurve:
    def test_grid(self, synthetic_data):
        truth, train, _ = synthetic_data
        heuristics = [PruneHeuristic.ERAND, PruneHeuristic.EFLOW]
        points = pruning_curve(truth, train, heuristics, [0.1, 0.5])
        assert [(p.heuristic, p.fraction) for p in points] == [
            ("rand", 0.1), ("rand", 0.5), ("flow", 0.1), ("flow", 0.5)
        ]
        base = log_likelihood(truth, train)
        for point in points:
            assert point.actual_drop == pytest.approx(base - point.mean_ll)

    @pytest.mark.slow
    def test_flow_beats_random(self, synthetic_data):
        truth, train, valid = synthetic_data
        flows = aggregate_flows(truth, train)
        flow_pruned, _ = prune(truth, PruneHeuristic.EFLOW, 0.5, flows=flows)
        random_lls = [
            log_likelihood(prune(truth, PruneHeuristic.ERAND, 0.5, seed=s)[0], valid) for s in range(5)
        ]
        assert log_likelihood(flow_pruned, valid) >= np.mean(random_lls)

    @pytest.mark.slow
    @pytest.mark.parametrize("fraction", [0.5, 0.75])
    def test_heuristic_ordering(self, fraction):
        ordered = 0
        for seed in range(20):
            truth = random_circuit([2, 3, 2, 2, 3, 2], seed=seed)
            train = sample_batch(truth, 400, seed=seed, name="train")
            flows = aggregate_flows(truth, train)
            lls = [
                log_likelihood(prune(truth, heuristic, fraction, flows=flows, seed=seed)[0], train)
                for heuristic in (PruneHeuristic.EFLOW, PruneHeuristic.EPARAM, PruneHeuristic.ERAND)
            ]
            ordered += lls[0] >= lls[1] >= lls[2]
        assert ordered >= 18
