import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import clear_components_off_border, flood_fill_holes
from texdefect.clustering import BlockLabels
from texdefect.errors import PreconditionError
from texdefect.fusion import (
    blocks_to_boundary_mask,
    blocks_to_solid_mask,
    edge_overlay,
    fill_holes,
    fuse,
    merge_masks,
    region_boundary,
    scale_for_display,
)
from texdefect.imaging import Corner, GrayImage, Periodicity, crop_all, crop_corner

PERIOD = Periodicity(row_period=60, col_period=50)


def grid_for(shape=(256, 320), corner=Corner.TOP_LEFT):
    return crop_corner(GrayImage(np.zeros(shape, dtype=np.uint8)), corner, PERIOD)


def labels(grid, ids):
    return BlockLabels(tuple(grid.block_ids), frozenset(ids))


def test_no_defects_empty_mask():
    g = grid_for()
    assert not blocks_to_boundary_mask(labels(g, []), g).any()


def test_single_block_perimeter():
    g = grid_for()
    m = blocks_to_boundary_mask(labels(g, [1]), g)
    assert m.shape == (256, 320)
    assert m.sum() == 2 * (50 + 60) - 4 == 216
    assert m[0, :60].all() and m[49, :60].all() and m[:50, 0].all() and m[:50, 59].all()
    assert not m[1:49, 1:59].any()


def test_adjacent_blocks_union():
    g = grid_for()
    a = blocks_to_boundary_mask(labels(g, [1]), g)
    b = blocks_to_boundary_mask(labels(g, [2]), g)
    ab = blocks_to_boundary_mask(labels(g, [1, 2]), g)
    np.testing.assert_array_equal(ab, a | b)


def test_boundary_uses_origin():
    g = grid_for(corner=Corner.BOTTOM_RIGHT)
    m = blocks_to_boundary_mask(labels(g, [1]), g)
    rows, cols = np.nonzero(m)
    assert (rows.min(), cols.min(), rows.max(), cols.max()) == (6, 20, 55, 79)


def test_solid_mask():
    g = grid_for()
    m = blocks_to_solid_mask(labels(g, [7]), g)
    r0, c0, r1, c1 = g.block_rect(7)
    assert m.sum() == 50 * 60
    assert m[r0:r1, c0:c1].all()


def test_merge_masks():
    empty = np.zeros((5, 5), dtype=bool)
    one = empty.copy()
    one[2, 2] = True
    other = empty.copy()
    other[0, 0:3] = True
    assert not merge_masks([empty] * 4).any()
    np.testing.assert_array_equal(merge_masks([one, empty, empty, empty]), one)
    np.testing.assert_array_equal(merge_masks([one, other, empty, empty]), one | other)
    with pytest.raises(PreconditionError):
        merge_masks([empty, np.zeros((4, 5), dtype=bool)])


def test_fill_hollow_rectangle():
    m = np.zeros((20, 30), dtype=bool)
    m[3, 4:15] = m[12, 4:15] = True
    m[3:13, 4] = m[3:13, 14] = True
    filled = fill_holes(m)
    expected = np.zeros_like(m)
    expected[3:13, 4:15] = True
    np.testing.assert_array_equal(filled, expected)
    np.testing.assert_array_equal(filled, flood_fill_holes(m))


def test_fill_solid_and_empty():
    m = np.zeros((8, 8), dtype=bool)
    assert not fill_holes(m).any()
    m[2:5, 2:6] = True
    np.testing.assert_array_equal(fill_holes(m), m)


def test_fill_diagonal_gap_is_a_hole():
    # background is 4-connected, so a diagonal-only leak does not reach the border
    m = np.array([
        [0, 0, 0, 0, 0],
        [0, 1, 1, 1, 0],
        [0, 1, 0, 1, 0],
        [0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0],
    ], dtype=bool)
    filled = fill_holes(m)
    assert filled[2, 2]
    np.testing.assert_array_equal(filled, flood_fill_holes(m))


def test_edge_overlay():
    img = GrayImage(np.full((10, 12), 7, dtype=np.uint8), levels=64)
    assert edge_overlay(np.zeros((10, 12), dtype=bool), img) == img

    full = edge_overlay(np.ones((10, 12), dtype=bool), img).pixels
    border = np.ones((10, 12), dtype=bool)
    border[1:-1, 1:-1] = False
    assert np.all(full[border] == 63) and np.all(full[~border] == 7)

    rect = np.zeros((10, 12), dtype=bool)
    rect[2:7, 3:9] = True
    out = edge_overlay(rect, img).pixels
    painted = out == 63
    # neighbor-scan oracle: set pixel with a clear 4-neighbor
    oracle = np.zeros_like(rect)
    for r in range(10):
        for c in range(12):
            if rect[r, c]:
                nb = [rect[r + dr, c + dc] if 0 <= r + dr < 10 and 0 <= c + dc < 12 else False
                      for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))]
                oracle[r, c] = not all(nb)
    np.testing.assert_array_equal(painted, oracle)
    assert painted.sum() == 2 * (5 + 6) - 4
    with pytest.raises(PreconditionError):
        edge_overlay(np.zeros((3, 3), dtype=bool), img)


def test_fuse_fills_block_outlines():
    img = GrayImage(np.zeros((256, 320), dtype=np.uint8))
    grids = crop_all(img, PERIOD)
    labs = [labels(g, [7]) for g in grids]
    merged, filled = fuse(labs, grids)
    solid = merge_masks([blocks_to_solid_mask(lab, g) for lab, g in zip(labs, grids)])
    np.testing.assert_array_equal(filled, fill_holes(solid))
    assert merged.sum() < filled.sum()
    _, filled_solid = fuse(labs, grids, solid_blocks=True)
    np.testing.assert_array_equal(filled_solid, fill_holes(solid))


def test_disjoint_sets_or_to_union():
    g = grid_for()
    a = blocks_to_boundary_mask(labels(g, [1, 9]), g)
    b = blocks_to_boundary_mask(labels(g, [13, 25]), g)
    np.testing.assert_array_equal(a | b, blocks_to_boundary_mask(labels(g, [1, 9, 13, 25]), g))


def test_display_scaling():
    img = GrayImage(np.array([[200, 10]], dtype=np.uint8))
    np.testing.assert_array_equal(scale_for_display(img, 0.5).pixels, [[100, 5]])


masks = st.integers(0, 2**16).map(
    lambda s: np.random.default_rng(s).random((12, 14)) < np.random.default_rng(s + 1).uniform(0.1, 0.7)
)


@settings(max_examples=60, deadline=None)
@given(m=masks)
def test_fill_properties(m):
    filled = fill_holes(m)
    assert np.all(filled[m])
    np.testing.assert_array_equal(fill_holes(filled), filled)
    np.testing.assert_array_equal(filled, flood_fill_holes(m))
    assert clear_components_off_border(filled) == 0
    assert np.all(region_boundary(filled) <= filled)


@settings(max_examples=40, deadline=None)
@given(a=masks, b=masks, c=masks)
def test_merge_algebra(a, b, c):
    np.testing.assert_array_equal(merge_masks([a, b]), merge_masks([b, a]))
    np.testing.assert_array_equal(
        merge_masks([merge_masks([a, b]), c]), merge_masks([a, merge_masks([b, c])])
    )
    np.testing.assert_array_equal(merge_masks([a, a]), a)
