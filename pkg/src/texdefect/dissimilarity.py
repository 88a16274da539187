"""
Chi-square histogram distance and all-pairs dissimilarity matrices.

    d(p, q) = sqrt( 1/2 * sum_ij (p_ij - q_ij)^2 / (p_ij + q_ij) )

Bins where ``p + q == 0`` contribute exactly zero. For normalized inputs the
distance lies in [0, 1] and is a metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .glcm import JointHistogram


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    d: np.ndarray
    block_ids: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def off_diagonal(self) -> np.ndarray:
        iu = np.triu_indices(self.n, k=1)
        return self.d[iu]

    def permuted(self, order: Sequence[int]) -> "DissimilarityMatrix":
        """Rows/columns reordered by position indices ``order``."""
        order = np.asarray(order)
        return DissimilarityMatrix(
            self.d[np.ix_(order, order)], tuple(self.block_ids[i] for i in order)
        )


def _chi_square_terms(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    s = p + q
    diff = p - q
    terms = np.zeros(np.broadcast(p, q).shape, dtype=np.float64)
    np.divide(diff * diff, s, out=terms, where=s > 0)
    return terms


def _as_probs(h) -> np.ndarray:
    return h.probs if isinstance(h, JointHistogram) else np.asarray(h, dtype=np.float64)


def chi_square_distance(p: JointHistogram | np.ndarray, q: JointHistogram | np.ndarray) -> float:
    pa, qa = _as_probs(p), _as_probs(q)
    if pa.shape != qa.shape:
        raise PreconditionError(
            f"histograms differ in size: {pa.shape} vs {qa.shape}"
        )
    return float(np.sqrt(0.5 * _chi_square_terms(pa, qa).sum()))


def chi_square_many(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise distances between two ``(n, ...)`` stacks of histograms."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise PreconditionError(f"histogram stacks differ in shape: {p.shape} vs {q.shape}")
    n = p.shape[0]
    terms = _chi_square_terms(p.reshape(n, -1), q.reshape(n, -1))
    return np.sqrt(0.5 * terms.sum(axis=1))


def _pairwise(flat: np.ndarray) -> np.ndarray:
    n = flat.shape[0]
    # bins empty in every signature contribute exactly 0 to every pair
    flat = np.ascontiguousarray(flat[:, flat.any(axis=0)])
    d = np.zeros((n, n), dtype=np.float64)
    for a in range(n - 1):
        rest = flat[a + 1:]
        terms = _chi_square_terms(flat[a][None, :], rest)
        row = np.sqrt(0.5 * terms.sum(axis=1))
        d[a, a + 1:] = row
        d[a + 1:, a] = row
    return d


def dissimilarity_matrix(
    signatures: Sequence[JointHistogram] | np.ndarray,
    block_ids: Sequence[int] | None = None,
) -> DissimilarityMatrix:
    """All-pairs chi-square distances; upper triangle computed, then mirrored.

    ``signatures`` may be a sequence of histograms, an ``(n, L, L)`` array, or
    an ``(n, k, L, L)`` array of per-offset histograms, in which case the
    distance for each pair is the mean over the ``k`` offsets.
    """
    if isinstance(signatures, np.ndarray):
        arr = signatures.astype(np.float64, copy=False)
    else:
        sigs = list(signatures)
        levels = {_as_probs(s).shape for s in sigs}
        if len(levels) > 1:
            raise PreconditionError(f"signatures have mixed sizes {sorted(levels)}")
        arr = np.stack([_as_probs(s) for s in sigs]) if sigs else np.empty((0, 1, 1))
    n = arr.shape[0]
    if n < 2:
        raise PreconditionError(f"need at least 2 signatures, got {n}")
    if block_ids is None:
        block_ids = range(1, n + 1)
    block_ids = tuple(int(b) for b in block_ids)
    if len(block_ids) != n:
        raise PreconditionError("block_ids length does not match signature count")

    if arr.ndim == 4:
        k = arr.shape[1]
        d = sum(_pairwise(arr[:, j].reshape(n, -1)) for j in range(k)) / k
    else:
        d = _pairwise(arr.reshape(n, -1))
    return DissimilarityMatrix(d, block_ids)


def write_matrix_csv(matrix: DissimilarityMatrix, path) -> None:
    """CSV with a header row/column of block IDs and ``%.6f`` entries."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block"] + list(matrix.block_ids))
        for bid, row in zip(matrix.block_ids, matrix.d):
            writer.writerow([bid] + [f"{v:.6f}" for v in row])


def matrix_heatmap(matrix: DissimilarityMatrix) -> np.ndarray:
    """Linear map of [0, 1] onto 0..255 as uint8."""
    return np.clip(np.rint(matrix.d * 255.0), 0, 255).astype(np.uint8)
