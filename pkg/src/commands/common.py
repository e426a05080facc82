"""Helpers shared by command handlers"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional, TypeVar

from pydantic import BaseModel, ValidationError

from circuit.dataset import Dataset
from circuit.exceptions import ConfigurationError
from circuit.model import Circuit
from storage.circuits import load_circuit, save_circuit
from storage.datasets import load_dataset
from storage.reports import write_manifest
from structures.hclt import build_hclt
from utils.config import EmConfig, ExperimentConfig, HcltConfig, load_config

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

DEFAULT_MODEL_SUFFIX = ".pcb"


def add_config_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Experiment config YAML (see config/config.example.yaml)")


def experiment(args: argparse.Namespace) -> Optional[ExperimentConfig]:
    return load_config(args.config) if getattr(args, "config", None) else None


def dataset_path(args: argparse.Namespace, config: Optional[ExperimentConfig], split: str) -> Optional[Path]:
    """Dataset path from the ``--<split>`` flag, falling back to the config"""
    flag = getattr(args, split if split != "train" else "data", None)
    if flag:
        return Path(flag)
    if config is not None:
        return getattr(config.data, split)
    return None


def require_dataset(args: argparse.Namespace, config: Optional[ExperimentConfig], split: str) -> Dataset:
    path = dataset_path(args, config, split)
    if path is None:
        flag = "data" if split == "train" else split
        raise ConfigurationError(f"No {split} dataset given", {"hint": f"pass --{flag} or --config"})
    return load_dataset(path)


def optional_dataset(
    args: argparse.Namespace, config: Optional[ExperimentConfig], split: str
) -> Optional[Dataset]:
    path = dataset_path(args, config, split)
    return load_dataset(path) if path is not None else None


def with_overrides(base: ModelT, overrides: Dict[str, Any]) -> ModelT:
    """Copy of a config section with the non-None command-line values applied"""
    values = {key: value for key, value in overrides.items() if value is not None}
    try:
        return type(base)(**{**base.model_dump(), **values})
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {type(base).__name__} settings: {e}") from e


def resolve_output(args: argparse.Namespace, config: Optional[ExperimentConfig]) -> Path:
    """
    Output model path: ``--out``, else ``<output_dir>/<command>.pcb`` from the config.

    The resolved path is stored back on ``args.out``.
    """
    if not getattr(args, "out", None):
        if config is None:
            raise ConfigurationError("No output path given", {"hint": "pass --out or --config"})
        args.out = str(config.output_dir / f"{args.command}{DEFAULT_MODEL_SUFFIX}")
    return Path(args.out)


def seed_of(args: argparse.Namespace, config: Optional[ExperimentConfig]) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return config.seed if config is not None else 0


def em_config(args: argparse.Namespace, config: Optional[ExperimentConfig], seed: int) -> EmConfig:
    """EM settings from the config file, with command-line overrides"""
    base = config.em if config is not None else EmConfig(seed=seed)
    return with_overrides(
        base,
        {
            "batch_size": getattr(args, "batch_size", None),
            "smoothing": getattr(args, "smoothing", None),
            "seed": getattr(args, "seed", None),
        },
    )


def initial_circuit(
    args: argparse.Namespace, config: Optional[ExperimentConfig], train: Dataset, seed: int
) -> Circuit:
    """Load ``--model`` or build an HCLT from the training data"""
    if getattr(args, "model", None):
        return load_circuit(args.model)
    structure = config.structure if config is not None else HcltConfig(seed=seed)
    return build_hclt(train, structure)


def finish(
    args: argparse.Namespace,
    circuit: Optional[Circuit],
    seed: Optional[int],
    config: Optional[ExperimentConfig] = None,
) -> None:
    """Save the output model (when there is one) and the run manifest beside it"""
    out = Path(args.out)
    if circuit is not None:
        save_circuit(circuit, out)
    arguments = {k: v for k, v in vars(args).items() if k != "handler"}
    write_manifest(
        out.parent,
        args.command,
        arguments,
        seed=seed,
        config=config.model_dump(mode="json") if config is not None else None,
    )
