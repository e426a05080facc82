"""Circuit persistence

Two formats are supported:

* text: a header followed by one tab-separated line per unit
  (``id kind scope children params``), floats written with 17 significant
  digits;
* binary: ``SPCB`` magic, version, little-endian integers and raw float64
  parameters, closed by a sha256 checksum of everything before it.

Loading re-checks parameter normalization: vectors off by at most
``RENORMALIZE_TOL`` are renormalized, larger deviations are rejected.
"""

import hashlib
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from circuit.exceptions import ChecksumError, FormatError, VersionError
from circuit.model import (
    NORMALIZATION_TOL,
    RENORMALIZE_TOL,
    Circuit,
    CircuitBuilder,
    UnitKind,
    normalize_log,
)
from circuit.validation import validate

logger = logging.getLogger(__name__)

TEXT_HEADER = "# sparsepc circuit v1"
BINARY_MAGIC = b"SPCB"
BINARY_VERSION = 1
BINARY_SUFFIXES = (".pcb", ".bin")

_CHECKSUM_SIZE = hashlib.sha256().digest_size
_KIND_NAMES = {UnitKind.INPUT: "input", UnitKind.SUM: "sum", UnitKind.PRODUCT: "product"}
_KIND_BY_NAME = {name: kind for kind, name in _KIND_NAMES.items()}

# Decoded unit: (kind, variable or children, parameters)
_Record = Tuple[UnitKind, Union[int, Tuple[int, ...]], Optional[np.ndarray]]


def _fmt(value: float) -> str:
    return "%.17g" % value


def _checked_log_params(uid: int, log_params: np.ndarray, strict: bool) -> np.ndarray:
    if not strict:
        return log_params
    total = float(np.exp(log_params).sum())
    deviation = abs(total - 1.0)
    if deviation <= NORMALIZATION_TOL:
        return log_params
    if deviation <= RENORMALIZE_TOL:
        logger.debug(f"Renormalized parameters of unit {uid} (off by {deviation:.3g})")
        return normalize_log(log_params)
    raise FormatError(
        f"Parameters of unit {uid} sum to {total:.12g}",
        {"unit": uid, "deviation": deviation},
    )


def _checked_probabilities(uid: int, probabilities: np.ndarray, strict: bool) -> np.ndarray:
    if not strict:
        return probabilities
    if (probabilities < 0).any():
        raise FormatError(f"Input unit {uid} has negative probabilities", {"unit": uid})
    deviation = abs(float(probabilities.sum()) - 1.0)
    if deviation <= NORMALIZATION_TOL:
        return probabilities
    if deviation <= RENORMALIZE_TOL:
        logger.debug(f"Renormalized distribution of unit {uid} (off by {deviation:.3g})")
        return probabilities / probabilities.sum()
    raise FormatError(
        f"Distribution of unit {uid} is not normalized", {"unit": uid, "deviation": deviation}
    )


def _assemble(
    cardinalities: List[int], root: int, records: List[_Record], strict: bool
) -> Circuit:
    builder = CircuitBuilder(cardinalities)
    for uid, (kind, link, params) in enumerate(records):
        if kind == UnitKind.INPUT:
            builder.input(int(link), _checked_probabilities(uid, params, strict))
        elif kind == UnitKind.SUM:
            builder.sum(link, log_params=_checked_log_params(uid, params, strict))
        else:
            builder.product(link)
    return builder.build(root)


def encode_text(circuit: Circuit) -> str:
    lines = [
        TEXT_HEADER,
        f"vars {circuit.num_vars}",
        "cardinalities " + " ".join(str(c) for c in circuit.cardinalities),
        f"root {circuit.root}",
        f"units {circuit.num_units}",
    ]
    for unit in circuit.units:
        scope = ",".join(str(v) for v in sorted(unit.scope))
        if unit.is_input:
            children = "-"
            params = " ".join(_fmt(p) for p in unit.distribution.probabilities)
        else:
            children = ",".join(str(c) for c in unit.children)
            params = "-" if unit.is_product else " ".join(_fmt(p) for p in unit.log_params)
        lines.append("\t".join([str(unit.id), _KIND_NAMES[unit.kind], scope, children, params]))
    return "\n".join(lines) + "\n"


def decode_text(text: str, strict: bool = True) -> Circuit:
    """
    Parse the text circuit format.

    Args:
        text: File contents
        strict: Check and repair parameter normalization

    Raises:
        VersionError: On an unknown header
        FormatError: On malformed lines or unnormalized parameters
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("# sparsepc circuit"):
        raise FormatError("Missing circuit header")
    if lines[0].strip() != TEXT_HEADER:
        raise VersionError(f"Unsupported circuit format '{lines[0].strip()}'")
    try:
        header = dict(line.split(" ", 1) for line in lines[1:5])
        num_vars = int(header["vars"])
        cardinalities = [int(c) for c in header["cardinalities"].split()]
        root = int(header["root"])
        num_units = int(header["units"])
    except (KeyError, ValueError) as e:
        raise FormatError(f"Malformed circuit header: {e}") from e
    if len(cardinalities) != num_vars:
        raise FormatError(f"Header declares {num_vars} variables but {len(cardinalities)} cardinalities")
    body = lines[5:]
    if len(body) != num_units:
        raise FormatError(f"Header declares {num_units} units, file has {len(body)}")

    records: List[_Record] = []
    for number, line in enumerate(body):
        fields = line.split("\t")
        try:
            uid, kind_name, scope, children, params = fields
            kind = _KIND_BY_NAME[kind_name]
            if int(uid) != number:
                raise ValueError(f"unit id {uid} out of order")
            if kind == UnitKind.INPUT:
                record: _Record = (kind, int(scope), np.array([float(p) for p in params.split()]))
            elif kind == UnitKind.SUM:
                link = tuple(int(c) for c in children.split(","))
                record = (kind, link, np.array([float(p) for p in params.split()]))
            else:
                record = (kind, tuple(int(c) for c in children.split(",")), None)
        except (ValueError, KeyError) as e:
            raise FormatError(f"Malformed unit line {number}: {e}", {"unit": number}) from e
        records.append(record)
    return _assemble(cardinalities, root, records, strict)


def encode_binary(circuit: Circuit) -> bytes:
    """Canonical binary form; identical circuits encode to identical bytes"""
    parts = [
        BINARY_MAGIC,
        np.array([BINARY_VERSION], dtype="<u2").tobytes(),
        np.array([circuit.num_vars, circuit.num_units, circuit.root], dtype="<u4").tobytes(),
        np.asarray(circuit.cardinalities, dtype="<u4").tobytes(),
    ]
    for unit in circuit.units:
        parts.append(bytes([int(unit.kind)]))
        if unit.is_input:
            dist = unit.distribution
            parts.append(np.array([dist.variable, dist.cardinality], dtype="<u4").tobytes())
            parts.append(dist.probabilities.astype("<f8").tobytes())
        else:
            parts.append(np.array([len(unit.children)], dtype="<u4").tobytes())
            parts.append(np.asarray(unit.children, dtype="<u4").tobytes())
            if unit.is_sum:
                parts.append(unit.log_params.astype("<f8").tobytes())
    payload = b"".join(parts)
    return payload + hashlib.sha256(payload).digest()


class _Reader:
    """Cursor over a little-endian byte buffer"""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        if self.offset + size > len(self.data):
            raise FormatError("Unexpected end of circuit data")
        values = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return values

    def take_int(self, dtype: str = "<u4") -> int:
        return int(self.take(dtype, 1)[0])


def decode_binary(data: bytes, strict: bool = True) -> Circuit:
    """
    Parse the binary circuit format.

    Raises:
        ChecksumError: If the file is truncated or corrupted
        VersionError: If the file was written by another format version
        FormatError: On a bad magic number or inconsistent content
    """
    if len(data) < len(BINARY_MAGIC) + _CHECKSUM_SIZE:
        raise ChecksumError("Circuit file is truncated", {"bytes": len(data)})
    payload, checksum = data[:-_CHECKSUM_SIZE], data[-_CHECKSUM_SIZE:]
    if hashlib.sha256(payload).digest() != checksum:
        raise ChecksumError("Circuit file checksum mismatch", {"bytes": len(data)})
    if not payload.startswith(BINARY_MAGIC):
        raise FormatError("Not a binary circuit file")

    reader = _Reader(payload)
    reader.offset = len(BINARY_MAGIC)
    version = reader.take_int("<u2")
    if version != BINARY_VERSION:
        raise VersionError(
            f"Circuit format version {version} is not supported",
            {"version": version, "supported": BINARY_VERSION},
        )
    num_vars, num_units, root = (int(v) for v in reader.take("<u4", 3))
    cardinalities = [int(c) for c in reader.take("<u4", num_vars)]

    records: List[_Record] = []
    for _ in range(num_units):
        kind = UnitKind(reader.take_int("<u1"))
        if kind == UnitKind.INPUT:
            variable, cardinality = (int(v) for v in reader.take("<u4", 2))
            records.append((kind, variable, reader.take("<f8", cardinality).astype(np.float64)))
        else:
            count = reader.take_int()
            children = tuple(int(c) for c in reader.take("<u4", count))
            params = reader.take("<f8", count).astype(np.float64) if kind == UnitKind.SUM else None
            records.append((kind, children, params))
    if reader.offset != len(payload):
        raise FormatError("Trailing bytes after circuit data")
    return _assemble(cardinalities, root, records, strict)


def detect_format(path: Union[str, Path]) -> str:
    return "binary" if Path(path).suffix in BINARY_SUFFIXES else "text"


def save_circuit(circuit: Circuit, path: Union[str, Path], format: Optional[str] = None) -> Path:
    """
    Write a circuit to disk.

    Args:
        circuit: Circuit to write
        path: Destination; parent directories are created
        format: ``"text"`` or ``"binary"`` (default: from the file suffix)
    """
    path = Path(path)
    format = format or detect_format(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "binary":
        path.write_bytes(encode_binary(circuit))
    elif format == "text":
        path.write_text(encode_text(circuit))
    else:
        raise FormatError(f"Unknown circuit format '{format}'")
    logger.info(f"Saved circuit with {circuit.size} parameters to {path}")
    return path


def load_circuit(path: Union[str, Path], format: Optional[str] = None, strict: bool = True) -> Circuit:
    """
    Read a circuit from disk.

    Args:
        path: Source file
        format: ``"text"`` or ``"binary"`` (default: from the file suffix)
        strict: Check and repair parameter normalization and re-validate the
            structure; ``validate`` loads with ``strict=False`` to report
            problems instead

    Raises:
        FormatError: If the file is missing or malformed, or with ``strict``
            if the circuit breaks a structural property
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"Circuit file not found: {path}", {"path": str(path)})
    format = format or detect_format(path)
    if format == "binary":
        circuit = decode_binary(path.read_bytes(), strict=strict)
    elif format == "text":
        circuit = decode_text(path.read_text(), strict=strict)
    else:
        raise FormatError(f"Unknown circuit format '{format}'")
    if strict:
        violations = validate(circuit)
        if violations:
            raise FormatError(
                f"Circuit in {path} has {len(violations)} structural violations",
                {"path": str(path), "violations": "; ".join(str(v) for v in violations)},
            )
    logger.debug(f"Loaded circuit {circuit.describe()} from {path}")
    return circuit
