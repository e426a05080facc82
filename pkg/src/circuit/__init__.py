"""Probabilistic circuit data model, validation and inference"""

from .dataset import Dataset, Sample
from .exceptions import (
    BoundHypothesisError,
    ChecksumError,
    CircuitError,
    ConfigurationError,
    DatasetError,
    EvidenceError,
    FormatError,
    GrowError,
    PruneError,
    StructureError,
    VersionError,
    ZeroLikelihoodError,
)
from .model import MARGINALIZED, Circuit, CircuitBuilder, Unit, UnitKind
from .validation import StructureViolation, validate

__all__ = [
    "Circuit",
    "CircuitBuilder",
    "Unit",
    "UnitKind",
    "MARGINALIZED",
    "Dataset",
    "Sample",
    "StructureViolation",
    "validate",
    "CircuitError",
    "StructureError",
    "EvidenceError",
    "DatasetError",
    "ZeroLikelihoodError",
    "PruneError",
    "BoundHypothesisError",
    "GrowError",
    "FormatError",
    "ChecksumError",
    "VersionError",
    "ConfigurationError",
]
