"""
Pixel masks from defective blocks, four-way merge, hole filling and the
final edge overlay.

Masks are plain boolean arrays with the original image's shape.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import ndimage as ndi

from .clustering import BlockLabels
from .errors import PreconditionError
from .imaging import BlockGrid, GrayImage

# background connectivity for hole filling
_CROSS = ndi.generate_binary_structure(2, 1)


def empty_mask(shape: tuple[int, int]) -> np.ndarray:
    return np.zeros(shape, dtype=bool)


def blocks_to_boundary_mask(labels: BlockLabels, grid: BlockGrid) -> np.ndarray:
    """1-pixel perimeter of every defective block, in original coordinates."""
    mask = empty_mask(grid.source_shape)
    for bid in labels.defective_ids:
        r0, c0, r1, c1 = grid.block_rect(bid)
        mask[r0, c0:c1] = True
        mask[r1 - 1, c0:c1] = True
        mask[r0:r1, c0] = True
        mask[r0:r1, c1 - 1] = True
    return mask


def blocks_to_solid_mask(labels: BlockLabels, grid: BlockGrid) -> np.ndarray:
    mask = empty_mask(grid.source_shape)
    for bid in labels.defective_ids:
        r0, c0, r1, c1 = grid.block_rect(bid)
        mask[r0:r1, c0:c1] = True
    return mask


def merge_masks(masks: Sequence[np.ndarray]) -> np.ndarray:
    """Pixelwise OR."""
    masks = [np.asarray(m, dtype=bool) for m in masks]
    if not masks:
        raise PreconditionError("no masks to merge")
    shape = masks[0].shape
    for m in masks[1:]:
        if m.shape != shape:
            raise PreconditionError(f"mask shape mismatch: {shape} vs {m.shape}")
    return np.logical_or.reduce(masks)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set every clear region that is not 4-connected to the image border."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return mask.copy()
    return ndi.binary_fill_holes(mask, structure=_CROSS)


def region_boundary(mask: np.ndarray) -> np.ndarray:
    """Set pixels that touch the image border or have a clear 4-neighbor."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior


def edge_overlay(filled: np.ndarray, original: GrayImage) -> GrayImage:
    """Paint the filled region's contour at the top gray level onto a copy."""
    filled = np.asarray(filled, dtype=bool)
    if filled.shape != original.shape:
        raise PreconditionError(
            f"mask {filled.shape} does not match image {original.shape}"
        )
    out = original.pixels.copy()
    out[region_boundary(filled)] = original.levels - 1
    return GrayImage(out, levels=original.levels)


def fuse(
    labels: Sequence[BlockLabels], grids: Sequence[BlockGrid], solid_blocks: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cropping masks merged and filled.

    Returns ``(merged, filled)``; ``merged`` is the OR of the per-cropping
    boundary (or solid) masks before filling.
    """
    to_mask = blocks_to_solid_mask if solid_blocks else blocks_to_boundary_mask
    merged = merge_masks([to_mask(lab, g) for lab, g in zip(labels, grids)])
    return merged, fill_holes(merged)


def scale_for_display(img: GrayImage, factor: float) -> GrayImage:
    """Linear luminance scaling for rendering only; analysis never sees it."""
    scaled = np.clip(np.rint(img.pixels.astype(np.float64) * factor), 0, img.levels - 1)
    return GrayImage(scaled.astype(np.int64), levels=img.levels)
