"""Utility modules for the sparse circuit toolkit"""

from .config import ExperimentConfig, Settings, get_settings, load_config
from .logger import setup_logging
from .cache import Cache, cached
from .parallel import map_chunks

__all__ = [
    "ExperimentConfig",
    "Settings",
    "get_settings",
    "load_config",
    "setup_logging",
    "Cache",
    "cached",
    "map_chunks",
]
