from __future__ import annotations

import csv
from typing import TYPE_CHECKING, Any, ClassVar, Literal

from pydantic import BaseModel, Field

from .base import FrozenModel

if TYPE_CHECKING:
    from pathlib import Path

__all__ = ("GridCell", "LossRecord", "MetricRow", "StopReason", "TrainReport")

StopReason = Literal["max_iters", "converged"]


class LossRecord(FrozenModel):
    """Loss components of one training iteration."""

    iteration: int
    l_1st: float
    l_2nd: float
    l_att: float
    l_reg: float
    l_mix: float
    elapsed_ms: float


class TrainReport(BaseModel):
    """Per-iteration loss history of a fit."""

    records: list[LossRecord] = Field(default_factory=list)
    wall_time: float = 0.0
    iterations: int = 0
    stop_reason: StopReason = "max_iters"
    lr: float = Field(default=0.0, description="Step size the successful attempt used.")

    CSV_HEADER: ClassVar[tuple[str, ...]] = (
        "iteration",
        "l_1st",
        "l_2nd",
        "l_att",
        "l_reg",
        "l_mix",
        "elapsed_ms",
    )

    def to_csv(self, path: Path) -> None:
        """Write one row per iteration, ready for plotting convergence curves."""
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.CSV_HEADER)
            for record in self.records:
                row = record.model_dump()
                writer.writerow(
                    [row["iteration"], *(repr(float(row[key])) for key in self.CSV_HEADER[1:])],
                )

    @property
    def losses(self) -> list[float]:
        """The ``l_mix`` curve."""
        return [record.l_mix for record in self.records]


class MetricRow(FrozenModel):
    """One evaluation measurement, as written to metric CSVs."""

    task: str
    dataset: str
    param: float
    metric: str
    value: float
    seed: int

    CSV_HEADER: ClassVar[tuple[str, ...]] = (
        "task",
        "dataset",
        "ratio_or_k",
        "metric",
        "value",
        "seed",
    )

    def as_csv(self) -> list[Any]:
        """Return the row in ``CSV_HEADER`` order."""
        param = int(self.param) if float(self.param).is_integer() else self.param
        return [self.task, self.dataset, param, self.metric, repr(self.value), self.seed]


class GridCell(FrozenModel):
    """Outcome of training and scoring one hyperparameter combination."""

    index: int
    params: dict[str, Any]
    score: float | None = None
    error: str | None = None
    seed: int
