"""
Gray-level co-occurrence counting and joint-probability signatures.

A count matrix ``C[i, j]`` records how many pixel pairs have value ``i`` at
``(r, c)`` and value ``j`` at ``(r + d_row, c + d_col)``. Displaced
coordinates outside the block are skipped; there is no wraparound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError
from .imaging import GrayImage

PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Offset:
    d_row: int
    d_col: int

    def __post_init__(self):
        if self.d_row == 0 and self.d_col == 0:
            raise PreconditionError("offset (0, 0) is not a displacement")

    def __neg__(self) -> "Offset":
        return Offset(-self.d_row, -self.d_col)

    def __str__(self) -> str:
        return f"{self.d_row},{self.d_col}"


# distance-1 Haralick directions: 0, 90, 45 and 135 degrees
DEFAULT_OFFSETS: tuple[Offset, ...] = (
    Offset(0, 1),
    Offset(1, 0),
    Offset(1, 1),
    Offset(1, -1),
)


def parse_offsets(text: str) -> tuple[Offset, ...]:
    """Parse ``"0,1;1,0"`` (or space separated) into offsets."""
    items = [tok for tok in text.replace(";", " ").split() if tok]
    if not items:
        raise PreconditionError(f"no offsets in {text!r}")
    out = []
    for tok in items:
        try:
            dr, dc = (int(v) for v in tok.split(","))
        except ValueError as exc:
            raise PreconditionError(f"bad offset {tok!r}; expected 'drow,dcol'") from exc
        out.append(Offset(dr, dc))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class CountMatrix:
    levels: int
    counts: np.ndarray
    offset: Offset

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class JointHistogram:
    levels: int
    probs: np.ndarray


def _pair_views(pixels: np.ndarray, offset: Offset) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = pixels.shape[-2:]
    dr, dc = offset.d_row, offset.d_col
    r0, r1 = max(0, -dr), min(rows, rows - dr)
    c0, c1 = max(0, -dc), min(cols, cols - dc)
    if r1 <= r0 or c1 <= c0:
        raise PreconditionError(
            f"offset ({dr}, {dc}) leaves no valid pairs in a {rows}x{cols} block"
        )
    src = pixels[..., r0:r1, c0:c1]
    dst = pixels[..., r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return src, dst


def compute_glcm(block: GrayImage, offset: Offset) -> CountMatrix:
    L = block.levels
    src, dst = _pair_views(block.pixels, offset)
    codes = src.astype(np.intp) * L + dst.astype(np.intp)
    counts = np.bincount(codes.ravel(), minlength=L * L).reshape(L, L)
    return CountMatrix(L, counts.astype(np.int64), offset)


def stack_counts(
    blocks: np.ndarray, levels: int, offsets: Iterable[Offset], symmetric: bool = False
) -> np.ndarray:
    """Count matrices for a whole stack of blocks in one pass.

    ``blocks`` has shape ``(n, rows, cols)``. Returns ``(n, len(offsets), L, L)``
    int64 counts, optionally symmetrized as ``C + C.T``.
    """
    blocks = np.asarray(blocks)
    n = blocks.shape[0]
    offsets = tuple(offsets)
    L = levels
    out = np.empty((n, len(offsets), L, L), dtype=np.int64)
    base = (np.arange(n, dtype=np.intp) * (L * L))[:, None]
    for k, off in enumerate(offsets):
        src, dst = _pair_views(blocks, off)
        codes = (src.astype(np.intp) * L + dst.astype(np.intp)).reshape(n, -1) + base
        flat = np.bincount(codes.ravel(), minlength=n * L * L)
        out[:, k] = flat.reshape(n, L, L)
    if symmetric:
        out = out + out.swapaxes(-1, -2)
    return out


def normalize(counts: CountMatrix | np.ndarray, levels: int | None = None) -> JointHistogram:
    arr = counts.counts if isinstance(counts, CountMatrix) else np.asarray(counts)
    L = counts.levels if isinstance(counts, CountMatrix) else (levels or arr.shape[-1])
    total = arr.sum()
    if total <= 0:
        raise PreconditionError("cannot normalize an all-zero count matrix")
    return JointHistogram(L, arr.astype(np.float64) / float(total))


def block_signature(
    block: GrayImage, offsets: Sequence[Offset] = DEFAULT_OFFSETS, symmetric: bool = False
) -> JointHistogram:
    """Counts summed over every offset, then normalized once."""
    if not offsets:
        raise PreconditionError("offset set is empty")
    total = np.zeros((block.levels, block.levels), dtype=np.int64)
    for off in offsets:
        total += compute_glcm(block, off).counts
    if symmetric:
        total = total + total.T
    return normalize(total, block.levels)


def signatures_from_counts(counts: np.ndarray, mode: str = "sum") -> np.ndarray:
    """Turn ``(n, k, L, L)`` counts into probability arrays.

    ``mode="sum"`` gives ``(n, L, L)`` (one signature per block);
    ``mode="per-offset"`` gives ``(n, k, L, L)`` (one per block and offset).
    """
    if mode == "sum":
        summed = counts.sum(axis=1)
        totals = summed.sum(axis=(1, 2), keepdims=True)
    elif mode == "per-offset":
        summed = counts
        totals = summed.sum(axis=(2, 3), keepdims=True)
    else:
        raise PreconditionError(f"unknown aggregation mode {mode!r}")
    if np.any(totals <= 0):
        raise PreconditionError("cannot normalize an all-zero count matrix")
    return summed.astype(np.float64) / totals


def write_counts_csv(counts: CountMatrix | np.ndarray, path) -> None:
    """Dump an L x L count matrix as CSV of integers."""
    arr = counts.counts if isinstance(counts, CountMatrix) else np.asarray(counts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in arr:
            writer.writerow(int(v) for v in row)
