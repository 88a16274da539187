"""Run configuration: JSON file defaults overridden by command-line flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .clustering import LINKAGES
from .errors import PreconditionError
from .glcm import DEFAULT_OFFSETS, Offset, parse_offsets
from .imaging import DEFAULT_LEVELS, Periodicity

AGGREGATE_MODES = ("sum", "per-offset")


@dataclass(frozen=True)
class RunConfig:
    period_rows: int = 0  # rows per periodic unit (col_period)
    period_cols: int = 0  # columns per periodic unit (row_period)
    levels: int = DEFAULT_LEVELS
    offsets: tuple[Offset, ...] = DEFAULT_OFFSETS
    linkage: str = "average"
    aggregate: str = "sum"
    symmetric_glcm: bool = False
    gap_factor: float | None = None
    solid_blocks: bool = False
    min_overlap: float = 0.0
    inputs: tuple[str, ...] = ()
    truth: tuple[str, ...] = ()
    defect_types: tuple[str, ...] = ()
    out_dir: str = "."
    display_scale: float = 1.0
    boundaries: bool = False
    heatmaps: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.levels < 2 or self.levels > 256:
            raise PreconditionError(f"levels must be in [2, 256], got {self.levels}")
        if self.linkage not in LINKAGES:
            raise PreconditionError(f"unknown linkage {self.linkage!r}")
        if self.aggregate not in AGGREGATE_MODES:
            raise PreconditionError(f"unknown aggregate mode {self.aggregate!r}")
        if not self.offsets:
            raise PreconditionError("offset set is empty")
        if self.gap_factor is not None and self.gap_factor <= 0:
            raise PreconditionError("gap factor must be positive")
        if self.workers < 1:
            raise PreconditionError("workers must be >= 1")

    @property
    def period(self) -> Periodicity:
        return Periodicity(row_period=self.period_cols, col_period=self.period_rows)

    def check_offsets(self) -> None:
        for off in self.offsets:
            if abs(off.d_row) >= self.period_rows or abs(off.d_col) >= self.period_cols:
                raise PreconditionError(
                    f"offset ({off}) does not fit a {self.period_rows}x{self.period_cols} unit"
                )


def _coerce(name: str, value):
    if name == "offsets":
        if isinstance(value, str):
            return parse_offsets(value)
        return tuple(Offset(int(a), int(b)) for a, b in value)
    if name in ("inputs", "truth", "defect_types"):
        return (value,) if isinstance(value, str) else tuple(value)
    return value


def load_config(path=None, **overrides) -> RunConfig:
    """Build a config from an optional JSON file plus non-None overrides."""
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read config {path}: {exc}") from exc
        unknown = set(data) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: _coerce(k, v) for k, v in data.items()})
    values.update({k: _coerce(k, v) for k, v in overrides.items() if v is not None})
    return replace(RunConfig(), **values)
