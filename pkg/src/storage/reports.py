"""Diagnostic outputs: histograms, prune reports, curves and run manifests"""

import csv
import io
import logging
import platform
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import networkx
import numpy as np
import scipy
import yaml

from circuit.exceptions import ConfigurationError
from circuit.model import Circuit
from utils.config import TOOLKIT_NAME, TOOLKIT_VERSION

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"


def param_histogram(circuit: Circuit, bins: int = 10) -> str:
    """
    Histogram of linear-space sum parameters over ``[0, 1]`` as CSV.

    Columns: ``bin_start, bin_end, count, share``.

    Raises:
        ConfigurationError: If ``bins`` is below 1
    """
    if bins < 1:
        raise ConfigurationError(f"Histogram needs at least one bin, got {bins}", {"bins": bins})
    counts, edges = np.histogram(circuit.linear_params(), bins=bins, range=(0.0, 1.0))
    total = counts.sum()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["bin_start", "bin_end", "count", "share"])
    for start, end, count in zip(edges[:-1], edges[1:], counts):
        share = count / total if total else 0.0
        writer.writerow([f"{start:.6g}", f"{end:.6g}", int(count), f"{share:.6g}"])
    return buffer.getvalue()


def curve_to_csv(points: Sequence[Any]) -> str:
    """Rows of dataclass records (e.g. pruning curve points) as CSV"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if points:
        rows = [asdict(p) for p in points]
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow(list(row.values()))
    return buffer.getvalue()


def write_text(path: Union[str, Path], content: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    logger.info(f"Wrote {path}")
    return path


def versions() -> Dict[str, str]:
    return {
        TOOLKIT_NAME: TOOLKIT_VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "networkx": networkx.__version__,
    }


def write_manifest(
    output_dir: Union[str, Path],
    command: str,
    arguments: Dict[str, Any],
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Record how an output directory was produced.

    The manifest holds the command, its arguments, the resolved config, the
    seed and library versions, and no timestamps, so identical reruns write
    identical manifests.
    """
    manifest = {
        "command": command,
        "arguments": {k: str(v) if isinstance(v, Path) else v for k, v in sorted(arguments.items())},
        "seed": seed,
        "config": config,
        "versions": versions(),
    }
    return write_text(Path(output_dir) / MANIFEST_NAME, yaml.safe_dump(manifest, sort_keys=False))
