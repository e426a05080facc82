"""Prune-grow-finetune structure learning and compression"""

import numpy as np
import pytest

from circuit import CircuitBuilder, Dataset, validate
from circuit.sampler import sample_batch
from circuit.evaluation import log_likelihood
from learning.em import em_full_batch, initialize_parameters
from learning.loop import compress, structure_learn
from structures.chow_liu import chow_liu, estimate_mutual_info
from structures.hclt import compile_hclt
from structures.simple import dense_mixture, random_circuit
from utils.config import CompressConfig, EmConfig, LoopConfig, ScheduleSegment


@pytest.fixture
def trained(synthetic_data):
    _, train, _ = synthetic_data
    tree = chow_liu(estimate_mutual_info(train))
    start = initialize_parameters(compile_hclt(tree, train.cardinalities, 2), train, seed=0)
    circuit, _ = em_full_batch(start, train, smoothing=0.01, epochs=5)
    return circuit


@pytest.fixture
def skewed():
    """Two point-mass leaves mixed 0.99 / 0.01, and data where one row needs the rare leaf"""
    b = CircuitBuilder([2])
    circuit = b.build(b.sum([b.input(0, [1.0, 0.0]), b.input(0, [0.0, 1.0])], [0.99, 0.01]))
    data = Dataset(np.array([[0]] * 99 + [[1]]), (2,), name="skewed")
    return circuit, data


def full_batch_em(rows, epochs):
    return EmConfig(
        batch_size=rows,
        smoothing=0.01,
        schedule=[ScheduleSegment(alpha_start=1.0, alpha_end=1.0, epochs=epochs)],
    )


@pytest.fixture
def short_em():
    schedule = [ScheduleSegment(alpha_start=0.5, alpha_end=0.1, epochs=2)]
    return EmConfig(batch_size=100, smoothing=0.01, schedule=schedule)


class TestStructureLearn:
    def test_best_is_not_worse(self, trained, synthetic_data, short_em):
        _, train, valid = synthetic_data
        loop = LoopConfig(prune_fraction=0.5, max_iterations=2, patience=2)
        best, log = structure_learn(trained, train, valid, loop, short_em)
        assert log_likelihood(best, valid) >= log_likelihood(trained, valid)
        assert validate(best) == []

    def test_log_phases(self, trained, synthetic_data, short_em):
        _, train, valid = synthetic_data
        loop = LoopConfig(prune_fraction=0.5, max_iterations=2, patience=5)
        _, log = structure_learn(trained, train, valid, loop, short_em)
        phases = [r.phase for r in log]
        assert phases[:3] == ["initial", "prune", "grow"]
        assert phases.count("prune") == 2
        assert phases.count("finetune") == 2 * short_em.total_epochs
        epochs = [r.epoch for r in log]
        assert epochs == sorted(epochs)

    def test_parameter_count_changes_only_structurally(self, trained, synthetic_data, short_em):
        _, train, valid = synthetic_data
        loop = LoopConfig(prune_fraction=0.5, max_iterations=1)
        _, log = structure_learn(trained, train, valid, loop, short_em)
        records = list(log)
        for before, after in zip(records, records[1:]):
            if after.phase == "finetune" and before.phase in ("grow", "finetune"):
                assert after.num_params == before.num_params

    def test_keeps_parameter_count(self, trained, synthetic_data, short_em):
        _, train, valid = synthetic_data
        loop = LoopConfig(prune_fraction=0.75, max_iterations=2, patience=5)
        _, log = structure_learn(trained, train, valid, loop, short_em)
        grown = [r.num_params for r in log if r.phase == "grow"]
        assert len(grown) == 2
        assert all(abs(size - trained.size) <= 2 for size in grown)

    def test_zero_likelihood_prune_is_not_an_improvement(self, skewed, short_em):
        circuit, data = skewed
        loop = LoopConfig(prune_fraction=0.5, max_iterations=3, patience=1)
        best, log = structure_learn(circuit, data, data, loop, short_em)
        assert best is circuit
        assert [r.phase for r in log] == ["initial", "prune"]

    @pytest.mark.slow
    def test_beats_plain_em(self):
        wins = 0
        for seed in range(10):
            truth = random_circuit([2, 3, 2, 2, 3, 2], seed=seed)
            train = sample_batch(truth, 400, seed=seed, name="train")
            tree = chow_liu(estimate_mutual_info(train))
            start = initialize_parameters(compile_hclt(tree, train.cardinalities, 2), train, seed=seed)
            warm, _ = em_full_batch(start, train, smoothing=0.01, epochs=5)
            em = full_batch_em(len(train), 5)
            loop = LoopConfig(prune_fraction=0.75, max_iterations=3, patience=3, seed=seed)
            learned, _ = structure_learn(warm, train, train, loop, em)
            plain, _ = em_full_batch(warm, train, smoothing=0.01, epochs=3 * em.total_epochs)
            wins += log_likelihood(learned, train) > log_likelihood(plain, train)
        assert wins >= 8

    def test_zero_iterations(self, trained, synthetic_data, short_em):
        _, train, valid = synthetic_data
        best, log = structure_learn(trained, train, valid, LoopConfig(max_iterations=0), short_em)
        assert best is trained
        assert len(log) == 1


class TestCompress:
    def test_within_budget(self, trained, synthetic_data, short_em):
        _, train, _ = synthetic_data
        config = CompressConfig(step_fraction=0.2, ll_budget=0.05, max_steps=3)
        result = compress(trained, train, config, short_em)
        base = log_likelihood(trained, train)
        assert 0.0 <= result.rate < 1.0
        assert log_likelihood(result.circuit, train) >= base - 0.05 * abs(base) - 1e-9
        assert result.rate == pytest.approx(1 - result.circuit.size / trained.size)

    def test_zero_budget_keeps_likelihood(self, trained, synthetic_data, short_em):
        _, train, _ = synthetic_data
        config = CompressConfig(step_fraction=0.5, ll_budget=0.0, max_steps=2)
        result = compress(trained, train, config, short_em)
        assert log_likelihood(result.circuit, train) >= log_likelihood(trained, train) - 1e-9
        assert result.log.records[0].phase == "initial"

    def test_zero_likelihood_prune_breaks_budget(self, skewed, short_em):
        circuit, data = skewed
        config = CompressConfig(step_fraction=0.5, ll_budget=0.5, max_steps=3)
        result = compress(circuit, data, config, short_em)
        assert result.circuit is circuit
        assert result.rate == 0.0
        assert [r.phase for r in result.log] == ["initial", "prune"]

    @pytest.mark.slow
    def test_overparameterized_mixture_halves(self):
        b = CircuitBuilder([2] * 8)
        components = [b.product([b.bernoulli(v, p) for v in range(8)]) for p in (0.9, 0.1)]
        truth = b.build(b.sum(components, [0.5, 0.5]))
        train = sample_batch(truth, 4000, seed=0, name="train")
        dense, _ = em_full_batch(dense_mixture(train.cardinalities, 8, seed=0), train, smoothing=0.01, epochs=30)
        config = CompressConfig(step_fraction=0.2, ll_budget=0.01, max_steps=20)
        result = compress(dense, train, config, full_batch_em(len(train), 5))
        base = log_likelihood(dense, train)
        assert result.rate >= 0.5
        assert log_likelihood(result.circuit, train) >= base - 0.01 * abs(base) - 1e-9
