"""Custom exceptions for circuit construction, inference and learning"""

from typing import Any, Dict, Optional, Sequence


class CircuitError(Exception):
    """Base exception for toolkit errors"""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = dict(details or {})
        super().__init__(self.message)


class StructureError(CircuitError):
    """Malformed circuit structure"""
    pass


class EvidenceError(CircuitError):
    """Sample does not match the circuit's variables"""
    pass


class DatasetError(CircuitError):
    """Dataset is malformed or unusable for the request"""
    pass


class ZeroLikelihoodError(CircuitError):
    """A row has zero probability under the circuit"""
    def __init__(self, message: str, row: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, {"row": row, **(details or {})})
        self.row = row


class PruneError(CircuitError):
    """Pruning request cannot be satisfied"""
    pass


class BoundHypothesisError(CircuitError):
    """Per-row flow mass of an edge set is not below one"""
    def __init__(self, message: str, rows: Sequence[int]):
        super().__init__(message, {"rows": list(rows)})
        self.rows = list(rows)


class GrowError(CircuitError):
    """Growing request is invalid"""
    pass


class FormatError(CircuitError):
    """Model or dataset file cannot be decoded"""
    pass


class ChecksumError(FormatError):
    """Binary payload does not match its trailing checksum"""
    pass


class VersionError(FormatError):
    """Unsupported file format version"""
    pass


class ConfigurationError(CircuitError):
    """Invalid or contradictory configuration"""
    pass
