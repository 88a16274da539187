"""
Gray image container, quantization, corner cropping and periodic blocks.

Coordinates are (row, col) throughout, 0-based in arrays. Block IDs are
1-based and row-major within one cropping.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageIOError, PreconditionError

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
DEFAULT_LEVELS = 64


@dataclass(frozen=True)
class GrayImage:
    """Immutable 2-D grid of gray levels in ``[0, levels - 1]``."""

    pixels: np.ndarray
    levels: int = 256

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise PreconditionError(f"expected a 2-D pixel grid, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise PreconditionError(f"zero-dimension image {px.shape}")
        if self.levels < 2:
            raise PreconditionError(f"levels must be >= 2, got {self.levels}")
        if not np.issubdtype(px.dtype, np.integer):
            raise PreconditionError(f"pixels must be integers, got {px.dtype}")
        if px.min() < 0 or px.max() > self.levels - 1:
            raise PreconditionError(
                f"pixel values outside [0, {self.levels - 1}]: "
                f"min {px.min()}, max {px.max()}"
            )
        dtype = np.uint8 if self.levels <= 256 else np.uint16
        px = np.array(px, dtype=dtype, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.levels == other.levels and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True)
class Periodicity:
    """Size of one periodic unit.

    ``row_period`` is the number of columns in a unit and ``col_period`` the
    number of rows, so a block has shape ``(col_period, row_period)``.
    """

    row_period: int
    col_period: int

    def __post_init__(self):
        if self.row_period < 2 or self.col_period < 2:
            raise PreconditionError(
                f"periods must be >= 2, got row_period={self.row_period}, "
                f"col_period={self.col_period}"
            )

    @property
    def block_shape(self) -> tuple[int, int]:
        return (self.col_period, self.row_period)


class Corner(str, enum.Enum):
    TOP_LEFT = "top-left"
    BOTTOM_LEFT = "bottom-left"
    TOP_RIGHT = "top-right"
    BOTTOM_RIGHT = "bottom-right"


@dataclass(frozen=True)
class BlockGrid:
    """One corner cropping split into periodic blocks."""

    source_corner: Corner
    origin: tuple[int, int]
    crop: GrayImage
    period: Periodicity
    source_shape: tuple[int, int]

    @property
    def blocks_per_row(self) -> int:
        return self.crop.width // self.period.row_period

    @property
    def blocks_per_col(self) -> int:
        return self.crop.height // self.period.col_period

    @property
    def n_blocks(self) -> int:
        return self.blocks_per_row * self.blocks_per_col

    @property
    def block_ids(self) -> list[int]:
        return list(range(1, self.n_blocks + 1))

    def block_rect(self, block_id: int) -> tuple[int, int, int, int]:
        """Return ``(row0, col0, row1, col1)`` of a block in original-image
        coordinates, end-exclusive."""
        if not 1 <= block_id <= self.n_blocks:
            raise PreconditionError(
                f"block id {block_id} out of range 1..{self.n_blocks}"
            )
        br, bc = divmod(block_id - 1, self.blocks_per_row)
        ph, pw = self.period.block_shape
        r0 = self.origin[0] + br * ph
        c0 = self.origin[1] + bc * pw
        return r0, c0, r0 + ph, c0 + pw


def load_grayscale(path) -> GrayImage:
    """Read an 8-bit PNG/PGM (or any Pillow raster) as a 256-level image.

    Color rasters are reduced with BT.601 luma weights.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageIOError(f"no such file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "P", "1"):
                arr = np.asarray(im.convert("L"), dtype=np.uint8)
            elif im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr16 = np.asarray(im, dtype=np.int64)
                arr = (arr16 >> 8).astype(np.uint8) if arr16.max() > 255 else arr16.astype(np.uint8)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                luma = rgb @ np.asarray(LUMA_WEIGHTS)
                arr = np.clip(np.rint(luma), 0, 255).astype(np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageIOError(f"cannot decode {path}: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ImageIOError(f"{path}: zero-dimension or non-raster image")
    return GrayImage(arr, levels=256)


def save_gray(img: GrayImage | np.ndarray, path, levels: int | None = None) -> None:
    """Write an image as 8-bit PNG, stretching ``levels`` onto 0..255."""
    if isinstance(img, GrayImage):
        arr, levels = img.pixels, img.levels
    else:
        arr = np.asarray(img)
        levels = levels or 256
    if arr.dtype == bool:
        out = arr.astype(np.uint8) * 255
    elif levels == 256:
        out = arr.astype(np.uint8)
    else:
        out = np.rint(arr.astype(np.float64) * 255.0 / (levels - 1)).astype(np.uint8)
    Image.fromarray(out, mode="L").save(Path(path), format="PNG")


def quantize(img: GrayImage, target_levels: int = DEFAULT_LEVELS) -> GrayImage:
    """Uniform binning ``floor(v * target_levels / levels)``."""
    if target_levels < 2:
        raise PreconditionError(f"target_levels must be >= 2, got {target_levels}")
    if target_levels > img.levels:
        raise PreconditionError(
            f"cannot quantize {img.levels} levels up to {target_levels}"
        )
    q = (img.pixels.astype(np.int64) * target_levels) // img.levels
    return GrayImage(q, levels=target_levels)


def crop_size(height: int, width: int, period: Periodicity) -> tuple[int, int]:
    """Largest multiples of the unit size not exceeding the image size."""
    return (height // period.col_period) * period.col_period, (
        width // period.row_period
    ) * period.row_period


def crop_corner(img: GrayImage, corner: Corner, period: Periodicity) -> BlockGrid:
    M, N = img.shape
    if M < 2 * period.col_period or N < 2 * period.row_period:
        raise PreconditionError(
            f"image {M}x{N} holds fewer than 2x2 periodic units of "
            f"{period.col_period}x{period.row_period}"
        )
    corner = Corner(corner)
    m_crop, n_crop = crop_size(M, N, period)
    r0 = M - m_crop if corner in (Corner.BOTTOM_LEFT, Corner.BOTTOM_RIGHT) else 0
    c0 = N - n_crop if corner in (Corner.TOP_RIGHT, Corner.BOTTOM_RIGHT) else 0
    crop = GrayImage(img.pixels[r0:r0 + m_crop, c0:c0 + n_crop], levels=img.levels)
    return BlockGrid(corner, (r0, c0), crop, period, (M, N))


def crop_all(img: GrayImage, period: Periodicity) -> list[BlockGrid]:
    return [crop_corner(img, corner, period) for corner in Corner]


def partition_blocks(grid: BlockGrid) -> Iterator[tuple[int, GrayImage]]:
    """Yield ``(block_id, block)`` in 1-based row-major order."""
    ph, pw = grid.period.block_shape
    px = grid.crop.pixels
    block_id = 1
    for br in range(grid.blocks_per_col):
        for bc in range(grid.blocks_per_row):
            tile = px[br * ph:(br + 1) * ph, bc * pw:(bc + 1) * pw]
            yield block_id, GrayImage(tile, levels=grid.crop.levels)
            block_id += 1


def block_stack(grid: BlockGrid) -> np.ndarray:
    """All blocks as one ``(n_blocks, P_c, P_r)`` array, same order as
    :func:`partition_blocks`."""
    ph, pw = grid.period.block_shape
    px = grid.crop.pixels
    return (
        px.reshape(grid.blocks_per_col, ph, grid.blocks_per_row, pw)
        .swapaxes(1, 2)
        .reshape(-1, ph, pw)
    )
