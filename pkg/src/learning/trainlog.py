"""Per-epoch training records"""

import csv
import io
import time
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path
from typing import Iterator, List, Optional, Union

from circuit.evaluation import ll_to_bpd


@dataclass(frozen=True)
class TrainRecord:
    """One row of a training log"""
    iteration: int
    epoch: int
    phase: str
    alpha: float
    train_ll: float
    valid_ll: Optional[float]
    train_bpd: float
    wall_time: float
    num_params: int


class TrainLog:
    """
    Ordered training records.

    Epoch indices increase monotonically across the whole log; the parameter
    count only changes on ``prune`` and ``grow`` records.
    """

    COLUMNS = tuple(f.name for f in fields(TrainRecord))

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.records: List[TrainRecord] = []
        self._started = time.perf_counter()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrainRecord]:
        return iter(self.records)

    @property
    def next_epoch(self) -> int:
        return self.records[-1].epoch + 1 if self.records else 0

    def record(
        self,
        phase: str,
        train_ll: float,
        num_params: int,
        iteration: int = 0,
        alpha: float = 1.0,
        valid_ll: Optional[float] = None,
        advance: bool = True,
    ) -> TrainRecord:
        """
        Append a record.

        Args:
            advance: Start a new epoch; structural steps (prune, grow) share
                the epoch index of the record before them
        """
        epoch = self.next_epoch if advance or not self.records else self.records[-1].epoch
        entry = TrainRecord(
            iteration=iteration,
            epoch=epoch,
            phase=phase,
            alpha=alpha,
            train_ll=train_ll,
            valid_ll=valid_ll,
            train_bpd=ll_to_bpd(train_ll, self.num_vars),
            wall_time=time.perf_counter() - self._started,
            num_params=num_params,
        )
        self.records.append(entry)
        return entry

    def extend(self, other: "TrainLog") -> None:
        """Append another log's records, renumbering their epochs"""
        offset = self.next_epoch - (other.records[0].epoch if other.records else 0)
        for entry in other.records:
            self.records.append(replace(entry, epoch=entry.epoch + offset))

    def last(self) -> Optional[TrainRecord]:
        return self.records[-1] if self.records else None

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for entry in self.records:
            writer.writerow(["" if v is None else v for v in astuple(entry)])
        return buffer.getvalue()

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path
