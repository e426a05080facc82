"""Categorical datasets and evidence"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DatasetError, EvidenceError
from .model import MARGINALIZED

Value = Optional[int]


@dataclass(frozen=True, eq=False)
class Sample:
    """
    Evidence over all variables.

    Each entry is an observed category index or ``MARGINALIZED``.
    """
    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values",
            tuple(MARGINALIZED if v is None else int(v) for v in self.values),
        )

    @classmethod
    def marginal(cls, num_vars: int) -> "Sample":
        return cls((MARGINALIZED,) * num_vars)

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    @property
    def is_complete(self) -> bool:
        return MARGINALIZED not in self.values


def as_sample(sample: Union[Sample, Sequence[Value], np.ndarray]) -> Sample:
    if isinstance(sample, Sample):
        return sample
    return Sample(tuple(None if v is None else int(v) for v in sample))


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Dense matrix of category indices.

    Attributes:
        rows: ``(num_rows, num_vars)`` integer matrix; ``MARGINALIZED`` marks
            unobserved cells
        cardinalities: Category count per column
        name: Label used in logs and reports
    """
    rows: np.ndarray
    cardinalities: Tuple[int, ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.int64)
        cardinalities = tuple(int(c) for c in self.cardinalities)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, len(cardinalities))
        if rows.ndim != 2:
            raise DatasetError(f"Dataset must be a matrix, got {rows.ndim} dimensions")
        if rows.shape[1] != len(cardinalities):
            raise DatasetError(
                f"Dataset has {rows.shape[1]} columns but {len(cardinalities)} cardinalities"
            )
        if any(c < 1 for c in cardinalities):
            raise DatasetError("Cardinalities must be positive")
        bad = (rows < MARGINALIZED) | (rows >= np.asarray(cardinalities, dtype=np.int64))
        if rows.size and bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise DatasetError(
                f"Cell ({row}, {col}) holds {rows[row, col]}, "
                f"outside [0, {cardinalities[col]})",
                {"row": row, "column": col},
            )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cardinalities", cardinalities)

    @classmethod
    def from_samples(
        cls, samples: Iterable[Sequence[Value]], cardinalities: Sequence[int], name: str = "dataset"
    ) -> "Dataset":
        rows = [as_sample(s).values for s in samples]
        return cls(np.asarray(rows, dtype=np.int64).reshape(len(rows), len(cardinalities)),
                   tuple(cardinalities), name)

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    @property
    def num_vars(self) -> int:
        return len(self.cardinalities)

    def subset(self, indices: Union[Sequence[int], np.ndarray, slice], name: Optional[str] = None) -> "Dataset":
        return Dataset(self.rows[indices], self.cardinalities, name or self.name)

    def repeat(self, times: int) -> "Dataset":
        return Dataset(np.tile(self.rows, (times, 1)), self.cardinalities, self.name)

    def sample(self, index: int) -> Sample:
        return Sample(tuple(int(v) for v in self.rows[index]))


def check_evidence(cardinalities: Sequence[int], rows: np.ndarray) -> None:
    """
    Check that evidence rows fit a circuit's variables.

    Raises:
        EvidenceError: On dimension mismatch or a category out of range
    """
    if rows.ndim != 2 or rows.shape[1] != len(cardinalities):
        raise EvidenceError(
            f"Evidence has {rows.shape[-1] if rows.ndim else 0} values, "
            f"circuit has {len(cardinalities)} variables"
        )
    if rows.size == 0:
        return
    bad = (rows < MARGINALIZED) | (rows >= np.asarray(cardinalities, dtype=np.int64))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise EvidenceError(
            f"Variable {col} has {cardinalities[col]} categories, got {rows[row, col]}",
            {"row": row, "variable": col},
        )
