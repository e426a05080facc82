"""Configuration management for the sparse circuit toolkit"""

import os
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from circuit.exceptions import ConfigurationError

TOOLKIT_NAME = "sparsepc"
TOOLKIT_VERSION = "0.3.0"


class Settings(BaseSettings):
    """Process-level settings read from SPARSEPC_* environment variables or .env"""
    model_config = SettingsConfigDict(env_prefix="SPARSEPC_", env_file=".env", extra="ignore")

    num_threads: int = Field(default_factory=lambda: min(4, os.cpu_count() or 1), ge=1)
    chunk_size: int = Field(default=2048, ge=1)
    log_level: Optional[str] = None
    config_path: Optional[str] = None


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached process settings"""
    return Settings()


class ScheduleSegment(BaseModel):
    """One piecewise-linear learning-rate segment"""
    alpha_start: float = Field(ge=0.0, le=1.0)
    alpha_end: float = Field(ge=0.0, le=1.0)
    epochs: int = Field(ge=0)


def _default_schedule() -> List[ScheduleSegment]:
    return [
        ScheduleSegment(alpha_start=1.0, alpha_end=0.1, epochs=50),
        ScheduleSegment(alpha_start=0.1, alpha_end=0.01, epochs=50),
        ScheduleSegment(alpha_start=0.01, alpha_end=0.001, epochs=50),
    ]


class EmConfig(BaseModel):
    """Mini-batch EM configuration"""
    batch_size: int = Field(default=512, ge=1)
    smoothing: float = Field(default=0.01, ge=0.0)
    schedule: List[ScheduleSegment] = Field(default_factory=_default_schedule)
    seed: int = 0

    @property
    def total_epochs(self) -> int:
        return sum(segment.epochs for segment in self.schedule)


class LoopConfig(BaseModel):
    """Prune-grow-finetune loop configuration"""
    prune_fraction: float = Field(default=0.75, gt=0.0, lt=1.0)
    grow_sigma2: float = Field(default=0.1, ge=0.0)
    max_iterations: int = Field(default=10, ge=0)
    patience: int = Field(default=2, ge=1)
    keep_capacity: bool = True
    seed: int = 0


class CompressConfig(BaseModel):
    """Iterative compression configuration"""
    step_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    ll_budget: float = Field(default=0.01, ge=0.0)
    max_steps: int = Field(default=20, ge=1)


class HcltConfig(BaseModel):
    """Hidden Chow-Liu tree construction"""
    hidden_states: int = Field(default=16, ge=1)
    smoothing: float = Field(default=0.1, ge=0.0)
    leaf_pseudocount: float = Field(default=1.0, ge=0.0)
    quantize_buckets: Optional[int] = Field(default=None, ge=2)
    root_variable: int = Field(default=0, ge=0)
    seed: int = 0


class DataConfig(BaseModel):
    """Dataset locations"""
    train: Path
    valid: Optional[Path] = None
    test: Optional[Path] = None

    @field_validator("train", "valid", "test")
    @classmethod
    def _exists(cls, path: Optional[Path]) -> Optional[Path]:
        if path is not None and not path.exists():
            raise ValueError(f"file not found: {path}")
        return path


class ExperimentConfig(BaseModel):
    """Main experiment configuration"""
    seed: int
    data: DataConfig
    output_dir: Path = Path("runs/default")
    structure: HcltConfig = Field(default_factory=HcltConfig)
    em: EmConfig = Field(default_factory=EmConfig)
    loop: LoopConfig = Field(default_factory=LoopConfig)
    compress: CompressConfig = Field(default_factory=CompressConfig)

    @model_validator(mode="after")
    def _propagate_seed(self) -> "ExperimentConfig":
        # Component seeds left at their defaults follow the experiment seed.
        for section in (self.structure, self.em, self.loop):
            if "seed" not in section.model_fields_set:
                section.seed = self.seed
        return self


def load_config(config_path: Optional[str] = None) -> ExperimentConfig:
    """
    Load experiment configuration from a YAML file.

    Args:
        config_path: Optional path to config file. If not provided, uses
                    SPARSEPC_CONFIG_PATH or config/config.yaml.

    Returns:
        Parsed configuration object

    Raises:
        ConfigurationError: If the file is missing or the config is invalid
    """
    if config_path is None:
        config_path = get_settings().config_path

    if config_path is None:
        path = Path(__file__).parent.parent.parent / "config" / "config.yaml"
    else:
        path = Path(config_path)

    if not path.exists():
        raise ConfigurationError(
            f"Configuration file not found: {path}",
            {"hint": "create one from config/config.example.yaml"},
        )

    with open(path, "r") as f:
        config_data = yaml.safe_load(f) or {}

    try:
        return ExperimentConfig(**config_data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}", {"path": str(path)}) from e
