"""Structural validation"""

from circuit import CircuitBuilder, validate
from circuit.validation import Rule, is_valid
from structures.simple import random_circuit


def rules(circuit):
    return [v.rule for v in validate(circuit)]


class TestValidate:
    def test_example_is_valid(self, example):
        assert validate(example.circuit) == []

    def test_random_circuits_are_valid(self):
        for seed in range(5):
            assert is_valid(random_circuit([2, 3, 2, 2], seed=seed))

    def test_shared_scope_product(self):
        b = CircuitBuilder([2, 2])
        root = b.product([b.bernoulli(0, 0.3), b.bernoulli(0, 0.6)])
        violations = validate(b.build(root))
        assert [v.rule for v in violations] == [Rule.DECOMPOSABILITY]
        assert violations[0].unit == root

    def test_mismatched_sum_scopes(self):
        b = CircuitBuilder([2, 2])
        b.sum([b.bernoulli(0, 0.3), b.bernoulli(1, 0.6)], [0.5, 0.5])
        assert Rule.SMOOTHNESS in rules(b.build())

    def test_unnormalized_sum(self):
        b = CircuitBuilder([2])
        b.sum([b.bernoulli(0, 0.3), b.bernoulli(0, 0.6)], [0.5, 0.6])
        assert rules(b.build()) == [Rule.NORMALIZATION]

    def test_unnormalized_input(self):
        b = CircuitBuilder([2])
        b.product([b.input(0, [0.5, 0.6])])
        assert rules(b.build()) == [Rule.INPUT_DISTRIBUTION]

    def test_sum_feeding_sum(self):
        b = CircuitBuilder([2])
        inner = b.sum([b.bernoulli(0, 0.3), b.bernoulli(0, 0.6)])
        b.sum([inner, b.bernoulli(0, 0.5)])
        assert Rule.ALTERNATION in rules(b.build())

    def test_unreachable_unit(self):
        b = CircuitBuilder([2])
        b.bernoulli(0, 0.2)
        a = b.bernoulli(0, 0.3)
        c = b.bernoulli(0, 0.6)
        circuit = b.build(b.sum([a, c]))
        violations = validate(circuit)
        assert [(v.unit, v.rule) for v in violations] == [(0, Rule.REACHABILITY)]

    def test_violation_message(self):
        b = CircuitBuilder([2])
        b.sum([b.bernoulli(0, 0.3), b.bernoulli(0, 0.6)], [0.5, 0.6])
        assert str(validate(b.build())[0]).startswith("unit 2: normalization:")

    def test_negative_probability(self):
        b = CircuitBuilder([2])
        b.input(0, [-0.5, 1.5])
        assert rules(b.build()) == [Rule.INPUT_DISTRIBUTION]
