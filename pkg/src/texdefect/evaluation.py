"""
Block-level confusion counts and the precision / recall / accuracy report.

All metrics are percentages. Degenerate denominators follow a fixed
convention: no positive predictions gives precision 100, no positive truth
gives recall 100.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .clustering import BlockLabels
from .errors import PreconditionError
from .imaging import BlockGrid

REPORT_COLUMNS = ("image", "defect_type", "n_blocks", "precision", "recall", "accuracy")


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    accuracy: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.precision, self.recall, self.accuracy)


@dataclass
class MetricsReport:
    """Evaluation of one image across its croppings."""

    image: str
    per_cropping: list[Confusion]
    per_cropping_metrics: list[Metrics]
    average: Metrics
    n_blocks: int
    defect_type: str = ""
    corners: list[str] = field(default_factory=list)

    def row(self) -> str:
        return format_row(self.n_blocks, self.average)

    def to_dict(self) -> dict:
        return {
            "image": self.image,
            "defect_type": self.defect_type,
            "n_blocks": self.n_blocks,
            "average": asdict(self.average),
            "croppings": [
                {"corner": corner, "confusion": asdict(c), "metrics": asdict(m)}
                for corner, c, m in zip(
                    self.corners or [""] * len(self.per_cropping),
                    self.per_cropping,
                    self.per_cropping_metrics,
                )
            ],
        }


def block_ground_truth(
    defect_mask: np.ndarray, grid: BlockGrid, min_overlap: float = 0.0
) -> BlockLabels:
    """A block is truth-defective when more than ``min_overlap`` of its pixels
    are set in the mask."""
    defect_mask = np.asarray(defect_mask, dtype=bool)
    if defect_mask.shape != tuple(grid.source_shape):
        raise PreconditionError(
            f"truth mask {defect_mask.shape} does not match image {grid.source_shape}"
        )
    if not 0.0 <= min_overlap < 1.0:
        raise PreconditionError(f"min_overlap must be in [0, 1), got {min_overlap}")
    defective = []
    for bid in grid.block_ids:
        r0, c0, r1, c1 = grid.block_rect(bid)
        if defect_mask[r0:r1, c0:c1].mean() > min_overlap:
            defective.append(bid)
    return BlockLabels(tuple(grid.block_ids), frozenset(defective))


def confusion(pred: BlockLabels, truth: BlockLabels) -> Confusion:
    if set(pred.block_ids) != set(truth.block_ids):
        raise PreconditionError("prediction and truth cover different block sets")
    ids = set(truth.block_ids)
    p, t = set(pred.defective), set(truth.defective)
    tp = len(p & t)
    fp = len(p - t)
    fn = len(t - p)
    return Confusion(tp=tp, fp=fp, tn=len(ids) - tp - fp - fn, fn=fn)


def metrics(c: Confusion) -> Metrics:
    precision = 100.0 if c.tp + c.fp == 0 else 100.0 * c.tp / (c.tp + c.fp)
    recall = 100.0 if c.tp + c.fn == 0 else 100.0 * c.tp / (c.tp + c.fn)
    accuracy = 100.0 * (c.tp + c.tn) / c.total if c.total else 100.0
    return Metrics(precision, recall, accuracy)


def mean_metrics(items: Sequence[Metrics]) -> Metrics:
    if not items:
        raise PreconditionError("nothing to average")
    arr = np.array([m.as_tuple() for m in items], dtype=np.float64)
    return Metrics(*(float(v) for v in arr.mean(axis=0)))


def aggregate_report(
    per_cropping: Sequence[Confusion],
    image: str = "",
    defect_type: str = "",
    corners: Sequence[str] = (),
) -> MetricsReport:
    """Average the per-cropping metrics; block count is summed."""
    per_cropping = list(per_cropping)
    per_metrics = [metrics(c) for c in per_cropping]
    return MetricsReport(
        image=image,
        per_cropping=per_cropping,
        per_cropping_metrics=per_metrics,
        average=mean_metrics(per_metrics),
        n_blocks=sum(c.total for c in per_cropping),
        defect_type=defect_type,
        corners=list(corners),
    )


def format_pct(value: float) -> str:
    """One decimal place; a perfect score prints as ``100``."""
    text = f"{value:.1f}"
    return "100" if text == "100.0" else text


def format_row(n_blocks: int | str, m: Metrics) -> str:
    return ", ".join(
        [str(n_blocks), format_pct(m.precision), format_pct(m.recall), format_pct(m.accuracy)]
    )


def summarize(reports: Sequence[MetricsReport]) -> Metrics:
    """Mean of per-image averages (group summary)."""
    return mean_metrics([r.average for r in reports])


def write_report_csv(reports: Sequence[MetricsReport], path) -> None:
    """One row per image plus an averaged summary row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            a = r.average
            writer.writerow(
                [r.image, r.defect_type, r.n_blocks,
                 format_pct(a.precision), format_pct(a.recall), format_pct(a.accuracy)]
            )
        if reports:
            s = summarize(reports)
            writer.writerow(
                ["average", "", sum(r.n_blocks for r in reports),
                 format_pct(s.precision), format_pct(s.recall), format_pct(s.accuracy)]
            )


def write_report_json(reports: Sequence[MetricsReport], path) -> None:
    payload = {"images": [r.to_dict() for r in reports]}
    if reports:
        payload["summary"] = asdict(summarize(reports))
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
