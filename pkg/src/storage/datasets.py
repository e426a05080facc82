"""Dataset files

CSV: the first row holds either integer cardinalities or column names (then
cardinalities are inferred as ``max + 1``); cells are category indices, ``?``
or empty for missing values.

Binary: ``SPCD`` magic, version, row/column counts, cardinalities and int32
cells, closed by a sha256 checksum.
"""

import csv
import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from circuit.dataset import Dataset
from circuit.exceptions import ChecksumError, DatasetError, FormatError, VersionError
from circuit.model import MARGINALIZED

logger = logging.getLogger(__name__)

MISSING_TOKENS = ("?", "")
BINARY_MAGIC = b"SPCD"
BINARY_VERSION = 1
_CHECKSUM_SIZE = hashlib.sha256().digest_size


def _parse_cell(token: str, row: int, col: int) -> int:
    token = token.strip()
    if token in MISSING_TOKENS:
        return MARGINALIZED
    try:
        value = int(token)
    except ValueError:
        raise DatasetError(
            f"Cell ({row}, {col}) is not an integer: '{token}'", {"row": row, "column": col}
        ) from None
    if value < 0:
        raise DatasetError(f"Cell ({row}, {col}) is negative: {value}", {"row": row, "column": col})
    return value


def load_csv(
    path: Union[str, Path],
    cardinalities: Optional[Sequence[int]] = None,
    name: Optional[str] = None,
) -> Dataset:
    """
    Read a dataset from CSV.

    Args:
        path: Source file
        cardinalities: Declared cardinalities, overriding the header
        name: Dataset label (default: file stem)

    Raises:
        DatasetError: On ragged rows, non-integer or negative cells, or a cell
            at or above its column's cardinality (the message names the cell)
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Dataset file not found: {path}", {"path": str(path)})
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"Dataset file is empty: {path}", {"path": str(path)}) from None
        body = [line for line in reader if line]

    width = len(header)
    rows: List[List[int]] = []
    for number, line in enumerate(body):
        if len(line) != width:
            raise DatasetError(
                f"Row {number} has {len(line)} cells, expected {width}", {"row": number}
            )
        rows.append([_parse_cell(token, number, col) for col, token in enumerate(line)])
    matrix = np.asarray(rows, dtype=np.int64).reshape(len(rows), width)

    if cardinalities is None:
        try:
            cardinalities = [int(token) for token in header]
        except ValueError:
            observed = np.where(matrix == MARGINALIZED, 0, matrix)
            cardinalities = list(observed.max(axis=0) + 1) if len(rows) else [1] * width
            logger.debug(f"Inferred cardinalities for {path.name} from the data")
    dataset = Dataset(matrix, tuple(cardinalities), name or path.stem)
    logger.info(f"Loaded {len(dataset)} rows x {dataset.num_vars} columns from {path}")
    return dataset


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write a dataset as CSV with a cardinality header"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(dataset.cardinalities)
        for row in dataset.rows:
            writer.writerow(["?" if v == MARGINALIZED else int(v) for v in row])
    logger.info(f"Saved {len(dataset)} rows to {path}")
    return path


def encode_dataset(dataset: Dataset) -> bytes:
    payload = b"".join(
        [
            BINARY_MAGIC,
            np.array([BINARY_VERSION], dtype="<u2").tobytes(),
            np.array([len(dataset), dataset.num_vars], dtype="<u4").tobytes(),
            np.asarray(dataset.cardinalities, dtype="<u4").tobytes(),
            dataset.rows.astype("<i4").tobytes(),
        ]
    )
    return payload + hashlib.sha256(payload).digest()


def decode_dataset(data: bytes, name: str = "dataset") -> Dataset:
    """
    Raises:
        ChecksumError: If the data is truncated or corrupted
        VersionError: On an unsupported format version
        FormatError: On a bad magic number or size mismatch
    """
    if len(data) < len(BINARY_MAGIC) + _CHECKSUM_SIZE:
        raise ChecksumError("Dataset file is truncated", {"bytes": len(data)})
    payload, checksum = data[:-_CHECKSUM_SIZE], data[-_CHECKSUM_SIZE:]
    if hashlib.sha256(payload).digest() != checksum:
        raise ChecksumError("Dataset file checksum mismatch", {"bytes": len(data)})
    if not payload.startswith(BINARY_MAGIC):
        raise FormatError("Not a binary dataset file")
    offset = len(BINARY_MAGIC)
    version = int(np.frombuffer(payload, dtype="<u2", count=1, offset=offset)[0])
    if version != BINARY_VERSION:
        raise VersionError(f"Dataset format version {version} is not supported", {"version": version})
    offset += 2
    num_rows, num_vars = (int(v) for v in np.frombuffer(payload, dtype="<u4", count=2, offset=offset))
    offset += 8
    expected = offset + 4 * num_vars + 4 * num_rows * num_vars
    if len(payload) != expected:
        raise FormatError(f"Dataset payload has {len(payload)} bytes, expected {expected}")
    cardinalities = np.frombuffer(payload, dtype="<u4", count=num_vars, offset=offset)
    offset += 4 * num_vars
    cells = np.frombuffer(payload, dtype="<i4", count=num_rows * num_vars, offset=offset)
    return Dataset(cells.astype(np.int64).reshape(num_rows, num_vars), tuple(int(c) for c in cardinalities), name)


def save_dataset_binary(dataset: Dataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(dataset))
    return path


def load_dataset_binary(path: Union[str, Path]) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Dataset file not found: {path}", {"path": str(path)})
    return decode_dataset(path.read_bytes(), name=path.stem)


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Load CSV or binary data, chosen by the ``.spcd`` suffix"""
    if Path(path).suffix == ".spcd":
        return load_dataset_binary(path)
    return load_csv(path)


def pad_sequences(
    sequences: Iterable[Sequence[int]], length: int, vocab_size: int, name: str = "sequences"
) -> Dataset:
    """
    Fixed-length rows from variable-length token sequences.

    Short sequences are filled with the pad category ``vocab_size``; long
    ones are truncated. Every column has ``vocab_size + 1`` categories.
    """
    rows = []
    truncated = 0
    for sequence in sequences:
        tokens = list(sequence)[:length]
        truncated += len(sequence) > length
        rows.append(tokens + [vocab_size] * (length - len(tokens)))
    if truncated:
        logger.debug(f"Truncated {truncated} sequences to length {length}")
    matrix = np.asarray(rows, dtype=np.int64).reshape(len(rows), length)
    return Dataset(matrix, (vocab_size + 1,) * length, name)
