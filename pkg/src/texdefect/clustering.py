"""
Agglomerative clustering of a dissimilarity matrix and minority-cluster
defect labeling.

Merges follow the Lance-Williams updates for single, complete and average
(UPGMA) linkage. When several cluster pairs share the minimal linkage
distance, the pair with the lexicographically smallest ``(min key, max key)``
is merged, where a cluster's key is the smallest block ID it contains.

Cluster numbering follows the usual convention: leaves are ``0..n-1`` in
matrix order and the cluster created by merge ``k`` is ``n + k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dissimilarity import DissimilarityMatrix
from .errors import PreconditionError

LINKAGES = ("single", "complete", "average")
DEFAULT_GAP_FACTOR = 2.0


@dataclass(frozen=True)
class Merge:
    cluster_a: int
    cluster_b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    leaf_ids: tuple[int, ...]
    merges: tuple[Merge, ...]
    linkage: str = "average"

    @property
    def n(self) -> int:
        return len(self.leaf_ids)

    def members(self, cluster: int) -> list[int]:
        """Leaf positions under a cluster label, ascending."""
        n = self.n
        stack, out = [cluster], []
        while stack:
            c = stack.pop()
            if c < n:
                out.append(c)
            else:
                m = self.merges[c - n]
                stack.extend((m.cluster_a, m.cluster_b))
        return sorted(out)

    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "linkage": self.linkage,
            "leaf_ids": list(self.leaf_ids),
            "merges": [
                {"a": m.cluster_a, "b": m.cluster_b, "height": m.height, "size": m.size}
                for m in self.merges
            ],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


@dataclass(frozen=True)
class BlockLabels:
    """Per-block defect flags for one cropping."""

    block_ids: tuple[int, ...]
    defective: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        unknown = set(self.defective) - set(self.block_ids)
        if unknown:
            raise PreconditionError(f"defective ids not in block set: {sorted(unknown)}")

    @property
    def defective_ids(self) -> list[int]:
        return sorted(self.defective)

    def is_defective(self, block_id: int) -> bool:
        return block_id in self.defective

    def flags(self) -> np.ndarray:
        return np.array([b in self.defective for b in self.block_ids], dtype=bool)


def format_ids(ids: Sequence[int]) -> str:
    """``(8, 9, 15, 16)`` style listing."""
    return "(" + ", ".join(str(i) for i in ids) + ")"


def agglomerate(D: DissimilarityMatrix, linkage: str = "average") -> Dendrogram:
    if linkage not in LINKAGES:
        raise PreconditionError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    n = D.n
    if n < 2:
        raise PreconditionError(f"need at least 2 blocks to cluster, got {n}")
    if len(set(D.block_ids)) != n:
        raise PreconditionError("block ids must be unique")

    work = np.array(D.d, dtype=np.float64, copy=True)
    keys = np.array(D.block_ids, dtype=np.int64)
    sizes = np.ones(n, dtype=np.int64)
    label = np.arange(n)  # slot -> current cluster label
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    merges: list[Merge] = []

    for step in range(n - 1):
        valid = upper & active[:, None] & active[None, :]
        vals = np.where(valid, work, np.inf)
        best = vals.min()
        ii, jj = np.nonzero(vals == best)
        ka, kb = keys[ii], keys[jj]
        lo, hi = np.minimum(ka, kb), np.maximum(ka, kb)
        pick = np.lexsort((hi, lo))[0]
        i, j = int(ii[pick]), int(jj[pick])
        # keep the slot holding the smaller key
        if keys[j] < keys[i]:
            i, j = j, i

        new_size = int(sizes[i] + sizes[j])
        merges.append(Merge(int(label[i]), int(label[j]), float(best), new_size))

        if linkage == "single":
            row = np.minimum(work[i], work[j])
        elif linkage == "complete":
            row = np.maximum(work[i], work[j])
        else:
            row = (sizes[i] * work[i] + sizes[j] * work[j]) / new_size
        work[i, :] = row
        work[:, i] = row
        work[i, i] = 0.0
        active[j] = False
        sizes[i] = new_size
        keys[i] = min(keys[i], keys[j])
        label[i] = n + step

    return Dendrogram(tuple(D.block_ids), tuple(merges), linkage)


def cut_two(dend: Dendrogram) -> tuple[list[int], list[int]]:
    """Remove the final merge; return the block IDs of the two subtrees.

    The group containing the smallest block ID comes first.
    """
    if dend.n < 2:
        raise PreconditionError("cannot cut a dendrogram with fewer than 2 leaves")
    last = dend.merges[-1]
    groups = [
        sorted(dend.leaf_ids[p] for p in dend.members(c))
        for c in (last.cluster_a, last.cluster_b)
    ]
    groups.sort(key=lambda g: g[0])
    return groups[0], groups[1]


def has_defect_gap(dend: Dendrogram, D: DissimilarityMatrix, gap_factor: float) -> bool:
    """True when the final merge stands out from the typical pair distance.

    The final merge height must reach ``gap_factor * median(off-diagonal)``
    and be strictly positive; otherwise the blocks are treated as one
    population.
    """
    final = dend.merges[-1].height
    if final <= 0.0:
        return False
    return final >= gap_factor * float(np.median(D.off_diagonal()))


def label_defective(
    partition: tuple[Sequence[int], Sequence[int]], D: DissimilarityMatrix
) -> BlockLabels:
    """Smaller cluster is defective.

    On equal sizes the mean cross-cluster distance would decide, but that mean
    is the same seen from either side, so the cluster holding the lowest
    block ID is labeled defective.
    """
    first, second = (list(g) for g in partition)
    if not first or not second:
        raise PreconditionError("both clusters must be non-empty")
    if len(first) != len(second):
        defective = first if len(first) < len(second) else second
    else:
        defective = first if min(first) < min(second) else second
    return BlockLabels(tuple(D.block_ids), frozenset(defective))


def classify_blocks(
    D: DissimilarityMatrix, linkage: str = "average", gap_factor: float | None = None
) -> tuple[Dendrogram, BlockLabels]:
    """Cluster, cut in two, and label; optionally apply the no-defect gap test."""
    dend = agglomerate(D, linkage)
    if gap_factor is not None and not has_defect_gap(dend, D, gap_factor):
        return dend, BlockLabels(tuple(D.block_ids), frozenset())
    return dend, label_defective(cut_two(dend), D)
