"""Shared fixtures: a small hand-checkable circuit and random circuits"""

import itertools
from dataclasses import dataclass

import numpy as np
import pytest

from circuit import Circuit, CircuitBuilder, Dataset


@dataclass(frozen=True)
class Example:
    """The four-variable example circuit with named unit ids"""
    circuit: Circuit
    p21: int
    p22: int
    s21: int
    s22: int
    p11: int
    p12: int
    root: int


def build_example() -> Example:
    """
    Two latent variables with two states each, all leaves Bernoulli.

    root = 0.4 p11 + 0.6 p12
    p11 = B1(.1) B3(.2) s21, p12 = B1(.7) B3(.3) s22
    s21 = 0.8 p21 + 0.2 p22, s22 = 0.1 p21 + 0.9 p22
    p21 = B2(.6) B4(.8), p22 = B2(.1) B4(.2)
    """
    b = CircuitBuilder([2, 2, 2, 2])
    p21 = b.product([b.bernoulli(1, 0.6), b.bernoulli(3, 0.8)])
    p22 = b.product([b.bernoulli(1, 0.1), b.bernoulli(3, 0.2)])
    s21 = b.sum([p21, p22], [0.8, 0.2])
    s22 = b.sum([p21, p22], [0.1, 0.9])
    p11 = b.product([b.bernoulli(0, 0.1), b.bernoulli(2, 0.2), s21])
    p12 = b.product([b.bernoulli(0, 0.7), b.bernoulli(2, 0.3), s22])
    root = b.sum([p11, p12], [0.4, 0.6])
    return Example(b.build(root), p21, p22, s21, s22, p11, p12, root)


@pytest.fixture
def example() -> Example:
    return build_example()


@pytest.fixture
def example_sample() -> tuple:
    return (0, 1, 0, 1)


@pytest.fixture
def example_row(example_sample) -> Dataset:
    return Dataset.from_samples([example_sample], [2, 2, 2, 2], name="example")


def all_states(cardinalities) -> Dataset:
    rows = list(itertools.product(*(range(c) for c in cardinalities)))
    return Dataset(np.asarray(rows, dtype=np.int64), tuple(cardinalities), name="all-states")


@pytest.fixture
def binary_states() -> Dataset:
    return all_states([2, 2, 2, 2])


@pytest.fixture
def synthetic_data():
    """Train/valid rows drawn from a random ground-truth circuit over six variables"""
    from circuit.sampler import sample_batch
    from structures.simple import random_circuit

    truth = random_circuit([2, 3, 2, 2, 3, 2], seed=7)
    train = sample_batch(truth, 400, seed=1, name="train")
    valid = sample_batch(truth, 200, seed=2, name="valid")
    return truth, train, valid
