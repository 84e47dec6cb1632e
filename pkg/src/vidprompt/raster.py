"""Fundamental raster types, mask geometry, and the alpha-compositing operator.

Coordinate convention used everywhere in this package: the pixel stored at
row ``i``, column ``j`` occupies the point ``(x=j, y=i)`` at its center,
with x growing rightward and y downward. All sub-pixel geometry (centroids,
tracked points, circle centers) lives in this frame.

All types are treated as immutable value objects: operations never mutate
their inputs and always return fresh instances, so they are safe to share
across worker threads/processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, EmptyMaskError


class PointF(NamedTuple):
    """Sub-pixel position (x rightward, y downward, origin at top-left)."""

    x: float
    y: float


class BBox(NamedTuple):
    """Axis-aligned box over pixel coordinates, all bounds inclusive."""

    min_x: int
    min_y: int
    max_x: int
    max_y: int

    @property
    def width(self) -> int:
        return self.max_x - self.min_x + 1

    @property
    def height(self) -> int:
        return self.max_y - self.min_y + 1


@dataclass(frozen=True)
class Frame:
    """One 8-bit RGB video frame plus its ordinal within the clip."""

    pixels: np.ndarray  # (H, W, 3) uint8
    index: int = 0

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 3 or p.shape[2] != 3:
            raise ContractViolation("Frame.pixels must be an (H, W, 3) array")
        if p.dtype != np.uint8:
            raise ContractViolation("Frame.pixels must be uint8")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ContractViolation("Frame dimensions must be at least 1x1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PromptLayer:
    """RGBA raster carrying one visual prompt.

    ``kind`` is a free-form tag (one of the eight prompt-kind names for
    synthesized layers); ``anchor_frame`` is the clip ordinal the prompt was
    authored at. Pixels with alpha 0 contribute nothing when blended.

    A fully transparent layer is representable on purpose: propagation emits
    transparent layers for frames where the prompt is absent or lost.
    Operations that *require* a visible mark (synthesis output, propagation
    input) enforce non-emptiness at their own boundaries.
    """

    pixels: np.ndarray  # (H, W, 4) uint8
    kind: str | None = None
    anchor_frame: int = 0

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 3 or p.shape[2] != 4:
            raise ContractViolation("PromptLayer.pixels must be an (H, W, 4) array")
        if p.dtype != np.uint8:
            raise ContractViolation("PromptLayer.pixels must be uint8")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ContractViolation("PromptLayer dimensions must be at least 1x1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def alpha(self) -> np.ndarray:
        return self.pixels[:, :, 3]

    @property
    def mark(self) -> np.ndarray:
        """Boolean mask of visible (alpha > 0) pixels."""
        return self.pixels[:, :, 3] > 0

    def is_empty(self) -> bool:
        return not bool(self.pixels[:, :, 3].any())

    @classmethod
    def transparent(cls, width: int, height: int, kind: str | None = None,
                    anchor_frame: int = 0) -> "PromptLayer":
        return cls(np.zeros((height, width, 4), dtype=np.uint8), kind, anchor_frame)


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel boolean raster."""

    bits: np.ndarray  # (H, W) bool

    def __post_init__(self):
        b = self.bits
        if not isinstance(b, np.ndarray) or b.ndim != 2:
            raise ContractViolation("BinaryMask.bits must be an (H, W) array")
        if b.dtype != np.bool_:
            raise ContractViolation("BinaryMask.bits must be bool")
        if b.shape[0] < 1 or b.shape[1] < 1:
            raise ContractViolation("BinaryMask dimensions must be at least 1x1")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        """Coerce any 2-D array; nonzero means foreground."""
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ContractViolation("mask array must be 2-D")
        return cls(a != 0)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not bool(self.bits.any())


def _require_same_dims(a_w, a_h, b_w, b_h, what: str):
    if (a_w, a_h) != (b_w, b_h):
        raise ContractViolation(
            f"{what}: dimensions differ ({a_w}x{a_h} vs {b_w}x{b_h})")


def alpha_blend(frame: Frame, layer: PromptLayer) -> Frame:
    """Composite ``layer`` over ``frame``: out = round(a*mark + (1-a)*src).

    ``a`` is the layer alpha scaled to [0, 1]. Rounding is half-up per
    channel, computed in exact integer arithmetic so results are
    bit-reproducible. The input frame is left untouched.
    """
    _require_same_dims(frame.width, frame.height, layer.width, layer.height,
                       "alpha_blend")
    src = frame.pixels.astype(np.uint32)
    mark = layer.pixels[:, :, :3].astype(np.uint32)
    a = layer.pixels[:, :, 3:4].astype(np.uint32)
    # round-half-up of (a*mark + (255-a)*src) / 255
    out = (2 * (a * mark + (255 - a) * src) + 255) // 510
    return Frame(out.astype(np.uint8), index=frame.index)


def mask_centroid(mask: BinaryMask) -> PointF:
    """Arithmetic mean of foreground pixel centers."""
    ys, xs = np.nonzero(mask.bits)
    if xs.size == 0:
        raise EmptyMaskError("mask_centroid: mask has no foreground pixels")
    return PointF(float(xs.mean()), float(ys.mean()))


def mask_bbox(mask: BinaryMask) -> BBox:
    """Tight inclusive bounding box of the foreground."""
    ys, xs = np.nonzero(mask.bits)
    if xs.size == 0:
        raise EmptyMaskError("mask_bbox: mask has no foreground pixels")
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def mask_boundary(bits: np.ndarray) -> np.ndarray:
    """Boundary of the foreground under 4-connectivity.

    A foreground pixel is boundary if any of its 4 neighbors is background
    or it touches the image edge.
    """
    b = np.asarray(bits, dtype=bool)
    padded = np.pad(b, 1, mode="constant", constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    return b & ~interior


def nearest_interior_point(mask: BinaryMask, p: PointF) -> PointF:
    """Foreground pixel center closest to ``p``; row-major order breaks ties.

    np.nonzero scans row-major and argmin returns the first minimum, which
    is exactly the documented tie-break.
    """
    ys, xs = np.nonzero(mask.bits)
    if xs.size == 0:
        raise EmptyMaskError("nearest_interior_point: mask has no foreground pixels")
    d2 = (xs - p.x) ** 2 + (ys - p.y) ** 2
    i = int(np.argmin(d2))
    return PointF(float(xs[i]), float(ys[i]))
