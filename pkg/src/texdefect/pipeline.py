"""
End-to-end detection for one image: quantize once, crop from four corners,
sign every block, cluster per cropping, then fuse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import clustering, evaluation, fusion, glcm, imaging
from .clustering import BlockLabels, Dendrogram
from .config import RunConfig
from .dissimilarity import DissimilarityMatrix, dissimilarity_matrix
from .imaging import BlockGrid, GrayImage


@dataclass
class CroppingResult:
    grid: BlockGrid
    matrix: DissimilarityMatrix
    dendrogram: Dendrogram
    labels: BlockLabels


@dataclass
class DefectReport:
    image: GrayImage
    croppings: list[CroppingResult]
    merged: np.ndarray
    mask: np.ndarray
    metrics: evaluation.MetricsReport | None = None
    name: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def any_defects(self) -> bool:
        return any(c.labels.defective for c in self.croppings)

    def id_lines(self) -> list[str]:
        if not self.any_defects:
            return ["no defects found"]
        return [
            f"{c.grid.source_corner.value}: {clustering.format_ids(c.labels.defective_ids)}"
            for c in self.croppings
        ]


def grid_signatures(grid: BlockGrid, cfg: RunConfig) -> np.ndarray:
    blocks = imaging.block_stack(grid)
    counts = glcm.stack_counts(blocks, grid.crop.levels, cfg.offsets, cfg.symmetric_glcm)
    return glcm.signatures_from_counts(counts, cfg.aggregate)


def analyze_grid(grid: BlockGrid, cfg: RunConfig) -> CroppingResult:
    sigs = grid_signatures(grid, cfg)
    D = dissimilarity_matrix(sigs, grid.block_ids)
    dend, labels = clustering.classify_blocks(D, cfg.linkage, cfg.gap_factor)
    return CroppingResult(grid, D, dend, labels)


def detect_image(img: GrayImage, cfg: RunConfig, name: str = "") -> DefectReport:
    cfg.check_offsets()
    q = imaging.quantize(img, cfg.levels) if img.levels != cfg.levels else img
    grids = imaging.crop_all(q, cfg.period)
    results = [analyze_grid(g, cfg) for g in grids]
    merged, filled = fusion.fuse(
        [r.labels for r in results], [r.grid for r in results], cfg.solid_blocks
    )
    return DefectReport(img, results, merged, filled, name=name)


def evaluate_report(
    report: DefectReport, truth_mask: np.ndarray, min_overlap: float = 0.0,
    defect_type: str = "",
) -> evaluation.MetricsReport:
    confusions = []
    for c in report.croppings:
        truth = evaluation.block_ground_truth(truth_mask, c.grid, min_overlap)
        confusions.append(evaluation.confusion(c.labels, truth))
    report.metrics = evaluation.aggregate_report(
        confusions,
        image=report.name,
        defect_type=defect_type,
        corners=[c.grid.source_corner.value for c in report.croppings],
    )
    return report.metrics
