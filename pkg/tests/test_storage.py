"""Model, dataset and report files"""

import hashlib

import numpy as np
import pytest
import yaml

from circuit import (
    ChecksumError,
    CircuitBuilder,
    ConfigurationError,
    Dataset,
    DatasetError,
    FormatError,
    VersionError,
)
from circuit.evaluation import root_log_likelihoods
from learning.pruner import CurvePoint
from storage.circuits import (
    decode_binary,
    decode_text,
    encode_binary,
    encode_text,
    load_circuit,
    save_circuit,
)
from storage.datasets import (
    decode_dataset,
    encode_dataset,
    load_csv,
    load_dataset,
    pad_sequences,
    save_csv,
    save_dataset_binary,
)
from storage.reports import curve_to_csv, param_histogram, write_manifest
from structures.simple import random_circuit


def two_leaf_mixture(weights):
    b = CircuitBuilder([2])
    return b.build(b.sum([b.bernoulli(0, 0.3), b.bernoulli(0, 0.6)], weights))


def rechecksum(payload: bytes) -> bytes:
    return payload + hashlib.sha256(payload).digest()


class TestCircuitText:
    def test_round_trip(self, example, binary_states):
        decoded = decode_text(encode_text(example.circuit))
        np.testing.assert_allclose(
            root_log_likelihoods(decoded, binary_states.rows),
            root_log_likelihoods(example.circuit, binary_states.rows),
            rtol=0,
            atol=1e-15,
        )
        assert decoded.num_units == example.circuit.num_units
        assert decoded.root == example.circuit.root

    def test_header(self, example):
        assert encode_text(example.circuit).startswith("# sparsepc circuit v1\n")

    def test_small_deviation_renormalized(self):
        decoded = decode_text(encode_text(two_leaf_mixture([0.4, 0.6 + 5e-7])))
        assert decoded.linear_params().sum() == pytest.approx(1.0, abs=1e-12)

    def test_large_deviation_rejected(self):
        text = encode_text(two_leaf_mixture([0.4, 0.7]))
        with pytest.raises(FormatError):
            decode_text(text)
        assert decode_text(text, strict=False).linear_params().sum() == pytest.approx(1.1)

    def test_malformed_line(self, example):
        lines = encode_text(example.circuit).splitlines()
        lines[-1] = "garbage"
        with pytest.raises(FormatError):
            decode_text("\n".join(lines))


class TestCircuitBinary:
    def test_round_trip_is_exact(self):
        circuit = random_circuit([2, 3, 2, 4], seed=8)
        decoded = decode_binary(encode_binary(circuit))
        np.testing.assert_array_equal(decoded.edges.log_param, circuit.edges.log_param)
        assert encode_binary(decoded) == encode_binary(circuit)
        assert decoded.digest == circuit.digest

    def test_corruption_detected(self, example):
        data = bytearray(encode_binary(example.circuit))
        data[20] ^= 0xFF
        with pytest.raises(ChecksumError):
            decode_binary(bytes(data))

    def test_truncation_detected(self, example):
        with pytest.raises(ChecksumError):
            decode_binary(encode_binary(example.circuit)[:-5])

    def test_unknown_version(self, example):
        payload = bytearray(encode_binary(example.circuit)[: -hashlib.sha256().digest_size])
        payload[4:6] = (2).to_bytes(2, "little")
        with pytest.raises(VersionError):
            decode_binary(rechecksum(bytes(payload)))

    def test_bad_magic(self, example):
        payload = bytearray(encode_binary(example.circuit)[: -hashlib.sha256().digest_size])
        payload[:4] = b"NOPE"
        with pytest.raises(FormatError):
            decode_binary(rechecksum(bytes(payload)))


class TestCircuitFiles:
    @pytest.mark.parametrize("name", ["model.pc", "model.pcb"])
    def test_save_and_load(self, tmp_path, example, binary_states, name):
        path = save_circuit(example.circuit, tmp_path / name)
        loaded = load_circuit(path)
        np.testing.assert_allclose(
            root_log_likelihoods(loaded, binary_states.rows),
            root_log_likelihoods(example.circuit, binary_states.rows),
            atol=1e-15,
        )

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_circuit(tmp_path / "absent.pc")

    def test_strict_load_validates_structure(self, tmp_path):
        b = CircuitBuilder([2, 2])
        mixed = b.build(b.sum([b.bernoulli(0, 0.3), b.bernoulli(1, 0.6)], [0.5, 0.5]))
        path = tmp_path / "mixed.pc"
        path.write_text(encode_text(mixed))
        with pytest.raises(FormatError) as info:
            load_circuit(path)
        assert "smoothness" in info.value.details["violations"]
        assert load_circuit(path, strict=False).size == 2

    def test_unknown_format(self, tmp_path, example):
        with pytest.raises(FormatError):
            save_circuit(example.circuit, tmp_path / "model.pc", format="xml")


class TestCsv:
    def test_cardinality_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("2,3\n0,2\n1,?\n")
        data = load_csv(path)
        assert data.cardinalities == (2, 3)
        np.testing.assert_array_equal(data.rows, [[0, 2], [1, -1]])
        assert data.name == "data"

    def test_named_header_infers_cardinalities(self, tmp_path):
        path = tmp_path / "named.csv"
        path.write_text("a,b,c\n0,1,4\n1,0,\n")
        assert load_csv(path).cardinalities == (2, 2, 5)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("2,2\n0,1\n1\n")
        with pytest.raises(DatasetError) as info:
            load_csv(path)
        assert info.value.details["row"] == 1

    def test_bad_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2,2\n0,x\n")
        with pytest.raises(DatasetError):
            load_csv(path)

    def test_out_of_range(self, tmp_path):
        path = tmp_path / "range.csv"
        path.write_text("2,2\n0,2\n")
        with pytest.raises(DatasetError):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "absent.csv")

    def test_round_trip(self, tmp_path):
        data = Dataset(np.array([[0, 2, -1], [1, 0, 3]]), (2, 3, 4))
        loaded = load_dataset(save_csv(data, tmp_path / "out.csv"))
        np.testing.assert_array_equal(loaded.rows, data.rows)
        assert loaded.cardinalities == data.cardinalities


class TestBinaryDataset:
    def test_round_trip(self, tmp_path):
        data = Dataset(np.array([[0, 2, -1], [1, 0, 3]]), (2, 3, 4))
        loaded = load_dataset(save_dataset_binary(data, tmp_path / "out.spcd"))
        np.testing.assert_array_equal(loaded.rows, data.rows)

    def test_corruption_detected(self):
        data = bytearray(encode_dataset(Dataset(np.array([[0, 1]]), (2, 2))))
        data[-40] ^= 0x01
        with pytest.raises(ChecksumError):
            decode_dataset(bytes(data))


class TestSequences:
    def test_padding_and_truncation(self):
        data = pad_sequences([[1, 2], [0, 1, 2, 0, 1]], length=3, vocab_size=3)
        np.testing.assert_array_equal(data.rows, [[1, 2, 3], [0, 1, 2]])
        assert data.cardinalities == (4, 4, 4)


class TestReports:
    def test_histogram_of_example(self, example):
        lines = param_histogram(example.circuit, bins=4).splitlines()
        assert lines[0] == "bin_start,bin_end,count,share"
        counts = [int(line.split(",")[2]) for line in lines[1:]]
        assert sum(counts) == 6
        assert counts == [2, 1, 1, 2]

    def test_histogram_needs_bins(self, example):
        with pytest.raises(ConfigurationError):
            param_histogram(example.circuit, bins=0)

    def test_curve_csv(self):
        text = curve_to_csv([CurvePoint("flow", 0.5, 10, -3.0, 0.1, 0.2)])
        assert text.splitlines()[0] == "heuristic,fraction,num_params,mean_ll,approx_drop,actual_drop"

    def test_manifest_is_reproducible(self, tmp_path):
        first = write_manifest(tmp_path / "a", "prune", {"fraction": 0.5}, seed=3).read_text()
        second = write_manifest(tmp_path / "b", "prune", {"fraction": 0.5}, seed=3).read_text()
        assert first == second
        manifest = yaml.safe_load(first)
        assert manifest["command"] == "prune"
        assert manifest["seed"] == 3
        assert "sparsepc" in manifest["versions"]
