"""Logging configuration for the sparse circuit toolkit"""

import logging
import logging.config
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from circuit.exceptions import ConfigurationError

from .config import TOOLKIT_NAME

DEFAULT_LOGGING_CONFIG = Path(__file__).parent.parent.parent / "config" / "logging.yaml"
BASIC_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def parse_level(name: str) -> int:
    """
    Numeric level for a level name.

    Raises:
        ConfigurationError: If the name is not a standard level
    """
    if name.upper() not in LEVELS:
        raise ConfigurationError(f"Unknown log level: {name}", {"choices": ",".join(LEVELS)})
    return getattr(logging, name.upper())


def _read(path: Path) -> Optional[Dict[str, Any]]:
    if not path.exists():
        return None
    with open(path, "r") as f:
        return yaml.safe_load(f)


def setup_logging(config_path: Optional[str] = None, log_level: Optional[str] = None) -> logging.Logger:
    """
    Setup logging configuration.

    Log files named by file handlers get their directories created. A level
    override applies to the root logger and to every logger the file
    configures, since those may not propagate.

    Args:
        config_path: Optional path to logging config YAML file
        log_level: Optional log level override (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Toolkit logger instance

    Raises:
        ConfigurationError: If ``log_level`` is not a standard level name
    """
    level = parse_level(log_level) if log_level else None
    path = Path(config_path) if config_path is not None else DEFAULT_LOGGING_CONFIG

    config_dict: Optional[Dict[str, Any]] = None
    failure: Optional[Exception] = None
    try:
        config_dict = _read(path)
        if config_dict is not None:
            for handler in config_dict.get("handlers", {}).values():
                if "filename" in handler:
                    Path(handler["filename"]).parent.mkdir(parents=True, exist_ok=True)
            logging.config.dictConfig(config_dict)
    except Exception as e:
        config_dict, failure = None, e
    if config_dict is None:
        # Fallback to basic config if the file is missing or broken
        logging.basicConfig(level=logging.INFO, format=BASIC_FORMAT)
    if failure is not None:
        logging.warning(f"Failed to load logging config from {path}: {failure}")

    if level is not None:
        logging.getLogger().setLevel(level)
        for name in (config_dict or {}).get("loggers", {}):
            logging.getLogger(name).setLevel(level)

    return logging.getLogger(TOOLKIT_NAME)
