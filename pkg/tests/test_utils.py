"""Configuration, logging, caching and chunked execution"""

import logging

import pytest

from circuit import ConfigurationError
from utils.cache import Cache, cached
from utils.config import Settings, load_config
from utils.logger import setup_logging
from utils.parallel import chunk_bounds, map_chunks


@pytest.fixture
def config_file(tmp_path):
    train = tmp_path / "train.csv"
    train.write_text("2,2\n0,1\n")
    path = tmp_path / "config.yaml"
    path.write_text(
        f"seed: 7\n"
        f"data:\n  train: {train}\n"
        f"em:\n  batch_size: 32\n  schedule:\n    - {{alpha_start: 1.0, alpha_end: 0.5, epochs: 2}}\n"
        f"loop:\n  seed: 3\n"
    )
    return path


class TestLoadConfig:
    def test_sections_and_seed(self, config_file):
        config = load_config(str(config_file))
        assert config.em.batch_size == 32
        assert config.em.total_epochs == 2
        assert config.em.seed == 7
        assert config.structure.seed == 7
        assert config.loop.seed == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError) as info:
            load_config(str(tmp_path / "absent.yaml"))
        assert "hint" in info.value.details

    def test_missing_dataset(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(f"seed: 1\ndata:\n  train: {tmp_path / 'absent.csv'}\n")
        with pytest.raises(ConfigurationError):
            load_config(str(path))

    def test_out_of_range_value(self, config_file):
        config_file.write_text(config_file.read_text() + "compress:\n  step_fraction: 1.5\n")
        with pytest.raises(ConfigurationError):
            load_config(str(config_file))


class TestSettings:
    def test_environment(self, monkeypatch):
        monkeypatch.setenv("SPARSEPC_CHUNK_SIZE", "17")
        monkeypatch.setenv("SPARSEPC_NUM_THREADS", "1")
        settings = Settings()
        assert settings.chunk_size == 17
        assert settings.num_threads == 1


class TestCache:
    def test_memoizes_by_key(self):
        calls = []
        store = Cache(maxsize=2)

        @cached(store, key_func=lambda x: str(x))
        def square(x):
            calls.append(x)
            return x * x

        assert square(3) == 9
        assert square(3) == 9
        assert calls == [3]
        assert store.size() == 1

    def test_evicts_least_recent(self):
        store = Cache(maxsize=2)
        store.set("a", 1)
        store.set("b", 2)
        store.get("a")
        store.set("c", 3)
        assert store.get("b") is None
        assert store.get("a") == 1


class TestChunks:
    def test_bounds(self):
        assert chunk_bounds(5, 2) == [(0, 2), (2, 4), (4, 5)]
        assert chunk_bounds(0, 3) == []

    @pytest.mark.parametrize("threads", [1, 3])
    def test_results_in_order(self, threads):
        parts = map_chunks(lambda s, e: list(range(s, e)), 10, chunk_size=3, num_threads=threads)
        assert [v for part in parts for v in part] == list(range(10))


class TestLogging:
    def test_unknown_level(self):
        with pytest.raises(ConfigurationError):
            setup_logging(log_level="LOUD")

    def test_override_reaches_configured_loggers(self, tmp_path):
        path = tmp_path / "logging.yaml"
        path.write_text(
            "version: 1\ndisable_existing_loggers: false\n"
            "loggers:\n  sparsepc-test:\n    level: DEBUG\n    propagate: false\n"
        )
        setup_logging(str(path), "error")
        assert logging.getLogger("sparsepc-test").level == logging.ERROR
