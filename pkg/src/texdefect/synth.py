"""
Synthetic periodic textures with planted defects and exact truth masks.

Two unit patterns are built in: ``dot`` (bright disc on a dark ground) and
``box`` (bright square outline). Gray values sit in the middle of a
64-level quantization bin so mild noise rarely changes the quantized value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .imaging import GrayImage

BACKGROUND = 66
FOREGROUND = 194
DEFAULT_DELTA = 40
DEFECT_SHAPES = ("bar", "blob", "broken-line")

# defect families: broken end, thin bar, thick bar
DEFECT_KINDS = ("BE", "TNB", "TKB")


def dot_unit(rows: int = 8, cols: int = 8) -> np.ndarray:
    r = np.arange(rows)[:, None] - (rows - 1) / 2.0
    c = np.arange(cols)[None, :] - (cols - 1) / 2.0
    radius = 0.3 * min(rows, cols)
    return np.where(r * r + c * c <= radius * radius, FOREGROUND, BACKGROUND).astype(np.uint8)


def box_unit(rows: int = 8, cols: int = 8) -> np.ndarray:
    unit = np.full((rows, cols), BACKGROUND, dtype=np.uint8)
    unit[1, 1:cols - 1] = FOREGROUND
    unit[rows - 2, 1:cols - 1] = FOREGROUND
    unit[1:rows - 1, 1] = FOREGROUND
    unit[1:rows - 1, cols - 2] = FOREGROUND
    return unit


UNIT_PATTERNS = {"dot": dot_unit, "box": box_unit}


@dataclass(frozen=True)
class Defect:
    shape: str
    position: tuple[int, int]
    size: tuple[int, int]
    delta: int = DEFAULT_DELTA

    def __post_init__(self):
        if self.shape not in DEFECT_SHAPES:
            raise PreconditionError(f"unknown defect shape {self.shape!r}")
        if self.size[0] < 1 or self.size[1] < 1:
            raise PreconditionError(f"defect size must be positive, got {self.size}")

    def footprint(self) -> np.ndarray:
        """Boolean mask of the bounding box ``size``."""
        h, w = self.size
        if self.shape == "bar":
            return np.ones((h, w), dtype=bool)
        if self.shape == "blob":
            r = (np.arange(h)[:, None] + 0.5 - h / 2.0) / (h / 2.0)
            c = (np.arange(w)[None, :] + 0.5 - w / 2.0) / (w / 2.0)
            return r * r + c * c <= 1.0
        # broken-line: dashes of 4 on, 2 off along the long axis
        along = np.arange(max(h, w)) % 6 < 4
        return np.broadcast_to(along[:, None] if h >= w else along[None, :], (h, w)).copy()


@dataclass
class SynthSpec:
    unit: np.ndarray
    tiling: tuple[int, int]
    noise_sigma: float = 0.0
    defects: list[Defect] = field(default_factory=list)
    seed: int = 0
    margin: tuple[int, int] = (0, 0)
    pattern: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        ph, pw = np.asarray(self.unit).shape
        return (self.tiling[0] * ph + self.margin[0], self.tiling[1] * pw + self.margin[1])

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "unit": np.asarray(self.unit).tolist(),
            "tiling": list(self.tiling),
            "margin": list(self.margin),
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "defects": [
                {"shape": d.shape, "position": list(d.position),
                 "size": list(d.size), "delta": d.delta}
                for d in self.defects
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        return cls(
            unit=np.asarray(data["unit"], dtype=np.uint8),
            tiling=tuple(data["tiling"]),
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            defects=[
                Defect(d["shape"], tuple(d["position"]), tuple(d["size"]), int(d["delta"]))
                for d in data.get("defects", [])
            ],
            seed=int(data.get("seed", 0)),
            margin=tuple(data.get("margin", (0, 0))),
            pattern=data.get("pattern", ""),
        )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def generate(spec: SynthSpec) -> tuple[GrayImage, np.ndarray]:
    """Render the texture and its truth mask (exactly the perturbed pixels)."""
    unit = np.asarray(spec.unit, dtype=np.int64)
    if unit.ndim != 2:
        raise PreconditionError("unit pattern must be 2-D")
    if spec.tiling[0] < 1 or spec.tiling[1] < 1:
        raise PreconditionError(f"tiling must be positive, got {spec.tiling}")
    ph, pw = unit.shape
    H, W = spec.shape
    reps = (-(-H // ph), -(-W // pw))
    img = np.tile(unit, reps)[:H, :W].astype(np.float64)

    rng = np.random.default_rng(spec.seed)
    if spec.noise_sigma > 0:
        img += rng.normal(0.0, spec.noise_sigma, size=img.shape)
    img = np.rint(img)

    truth = np.zeros((H, W), dtype=bool)
    for d in spec.defects:
        r0, c0 = d.position
        h, w = d.size
        if r0 < 0 or c0 < 0 or r0 + h > H or c0 + w > W:
            raise PreconditionError(f"defect {d} exceeds image bounds {H}x{W}")
        fp = d.footprint()
        img[r0:r0 + h, c0:c0 + w][fp] += d.delta
        truth[r0:r0 + h, c0:c0 + w] |= fp
    if 2 * truth.sum() >= H * W:
        raise PreconditionError("defects cover half the image or more")

    pixels = np.clip(img, 0, 255).astype(np.uint8)
    return GrayImage(pixels, levels=256), truth


def planted_defect(
    kind: str, image_shape: tuple[int, int], rng: np.random.Generator,
    delta: int | None = None, margin: tuple[int, int] = (0, 0),
) -> Defect:
    """Random defect of one family.

    ``TNB`` is a 1-pixel bar, ``TKB`` a 3-pixel bar and ``BE`` a dashed
    1-pixel line; lengths span 40-60% (bars) or 25-40% (broken line) of the
    usable extent along a random axis. The defect keeps ``margin`` pixels
    away from every edge so each corner cropping sees all of it.
    """
    mr, mc = margin
    H, W = image_shape[0] - 2 * mr, image_shape[1] - 2 * mc
    if H < 3 or W < 3:
        raise PreconditionError(f"no room for a defect inside margin {margin}")
    if kind not in DEFECT_KINDS:
        raise PreconditionError(f"unknown defect kind {kind!r}; choose from {DEFECT_KINDS}")
    horizontal = bool(rng.integers(2))
    extent = W if horizontal else H
    if kind == "BE":
        shape, thick, frac = "broken-line", 1, rng.uniform(0.25, 0.40)
    elif kind == "TNB":
        shape, thick, frac = "bar", 1, rng.uniform(0.40, 0.60)
    else:
        shape, thick, frac = "bar", 3, rng.uniform(0.40, 0.60)
    length = max(2, int(round(frac * extent)))
    size = (thick, length) if horizontal else (length, thick)
    r0 = mr + int(rng.integers(0, H - size[0] + 1))
    c0 = mc + int(rng.integers(0, W - size[1] + 1))
    if delta is None:
        delta = DEFAULT_DELTA if rng.integers(2) else -DEFAULT_DELTA
    return Defect(shape, (r0, c0), size, int(delta))


def random_spec(
    pattern: str = "dot",
    kinds: Sequence[str] = (),
    seed: int = 0,
    period: tuple[int, int] = (8, 8),
    tiling: tuple[int, int] = (12, 12),
    margin: tuple[int, int] = (4, 4),
    noise_sigma: float = 0.5,
) -> SynthSpec:
    """Seeded spec with one planted defect per entry of ``kinds``."""
    if pattern not in UNIT_PATTERNS:
        raise PreconditionError(f"unknown pattern {pattern!r}; choose from {sorted(UNIT_PATTERNS)}")
    unit = UNIT_PATTERNS[pattern](*period)
    spec = SynthSpec(unit, tuple(tiling), noise_sigma, [], seed, tuple(margin), pattern)
    rng = np.random.default_rng([seed, 7919])
    spec.defects = [planted_defect(k, spec.shape, rng, margin=spec.margin) for k in kinds]
    return spec
