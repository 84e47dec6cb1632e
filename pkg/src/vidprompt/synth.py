"""Synthesize the eight visual prompt kinds from a binary mask.

Shape policies (the source annotations only ever give masks, so every other
kind is derived from mask geometry):

* ``mask``          filled copy of the mask (fill alpha)
* ``mask_contour``  stroke along the 4-connectivity mask boundary
* ``rectangle``     outline on the tight mask bbox, stroke centered on it
* ``ellipse``       axis-aligned outline inscribed in the bbox
* ``triangle``      isoceles outline inscribed in the bbox, apex up
* ``scribble``      seeded random walk inside the mask, smoothed by
                    quadratic Bezier segments between waypoint midpoints
* ``arrow``         shaft from a sampled exterior tail to the interior point
                    nearest the centroid, with two 30-degree barbs
* ``point``         filled disc at the centroid (snapped inside the mask)

All randomness flows from the explicit seed; identical inputs produce
byte-identical layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage

from .errors import ContractViolation, DegenerateMaskError, EmptyMarkError, EmptyMaskError
from .geometry import (
    disc,
    rect_outline,
    sample_ellipse,
    sample_polyline,
    sample_quad_bezier,
    stroke_from_path,
)
from .raster import BinaryMask, PromptLayer, mask_bbox, mask_boundary, \
    mask_centroid, nearest_interior_point


class PromptKind(str, Enum):
    MASK = "mask"
    MASK_CONTOUR = "mask_contour"
    RECTANGLE = "rectangle"
    ELLIPSE = "ellipse"
    TRIANGLE = "triangle"
    SCRIBBLE = "scribble"
    ARROW = "arrow"
    POINT = "point"


ALL_KINDS: tuple[PromptKind, ...] = tuple(PromptKind)

DEFAULT_COLOR = (255, 64, 0)


def default_stroke_width(width: int, height: int) -> int:
    """Scale-invariant default: 0.6% of image diagonal, at least 2 px."""
    return max(2, round(0.006 * math.hypot(width, height)))


@dataclass(frozen=True)
class PromptStyle:
    color: tuple[int, int, int] = DEFAULT_COLOR
    fill_alpha: int = 128
    stroke_alpha: int = 255
    stroke_width: int = 2

    def __post_init__(self):
        if not all(0 <= c <= 255 for c in self.color):
            raise ContractViolation("PromptStyle.color channels must be in [0, 255]")
        if not (0 <= self.fill_alpha <= 255 and 0 <= self.stroke_alpha <= 255):
            raise ContractViolation("PromptStyle alphas must be in [0, 255]")
        if self.stroke_width < 1:
            raise ContractViolation("PromptStyle.stroke_width must be >= 1")


def default_style(width: int, height: int,
                  color: tuple[int, int, int] = DEFAULT_COLOR) -> PromptStyle:
    """Default look: translucent fills (so the object stays visible through
    the mark) and opaque outlines, stroke width scaled to the image."""
    return PromptStyle(color=color, fill_alpha=128, stroke_alpha=255,
                       stroke_width=default_stroke_width(width, height))


def resolve_style(width: int, height: int, color=None, fill_alpha=None,
                  stroke_alpha=None, stroke_width=None) -> PromptStyle:
    """Fill unspecified style fields from the per-image defaults. Shared by
    every entry point (CLI, bindings) so equal inputs give equal styles."""
    base = default_style(width, height)
    return PromptStyle(
        color=tuple(color) if color is not None else base.color,
        fill_alpha=fill_alpha if fill_alpha is not None else base.fill_alpha,
        stroke_alpha=stroke_alpha if stroke_alpha is not None
        else base.stroke_alpha,
        stroke_width=stroke_width if stroke_width is not None
        else base.stroke_width)


def random_prompt_kind(seed: int) -> PromptKind:
    """Uniform draw over the eight kinds, deterministic per seed."""
    i = int(np.random.default_rng(seed).integers(0, len(ALL_KINDS)))
    return ALL_KINDS[i]


def _compose_layer(mark: np.ndarray, alpha_value: int, style: PromptStyle,
                   kind: PromptKind, anchor_frame: int) -> PromptLayer:
    h, w = mark.shape
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    rgba[mark, 0] = style.color[0]
    rgba[mark, 1] = style.color[1]
    rgba[mark, 2] = style.color[2]
    rgba[mark, 3] = alpha_value
    return PromptLayer(rgba, kind=kind.value, anchor_frame=anchor_frame)


def _interior_pool(bits: np.ndarray, margin: float) -> np.ndarray:
    """Foreground eroded by ``margin`` px when that leaves pixels, else the
    foreground itself. Returns (N, 2) array of (x, y) pixel centers."""
    if margin >= 1.0:
        dist = ndimage.distance_transform_edt(bits)
        eroded = dist > margin
        if eroded.any():
            bits = eroded
    ys, xs = np.nonzero(bits)
    return np.stack([xs, ys], axis=1).astype(np.float64)


def _scribble_path(mask: BinaryMask, style: PromptStyle,
                   rng: np.random.Generator) -> np.ndarray:
    pool = _interior_pool(mask.bits, style.stroke_width / 2.0 + 1.0)
    n_way = int(rng.integers(4, 9))
    replace = pool.shape[0] < n_way
    idx = rng.choice(pool.shape[0], size=n_way, replace=replace)
    way = pool[idx]
    # smooth: quadratic Bezier between consecutive waypoint midpoints,
    # with the waypoint itself as control point
    mids = (way[:-1] + way[1:]) / 2.0
    parts = [sample_polyline([way[0], mids[0]])]
    for i in range(1, n_way - 1):
        parts.append(sample_quad_bezier(mids[i - 1], way[i], mids[i]))
    parts.append(sample_polyline([mids[-1], way[-1]]))
    return np.concatenate(parts, axis=0)


def _arrow_path(mask: BinaryMask, style: PromptStyle,
                rng: np.random.Generator) -> np.ndarray:
    h, w = mask.height, mask.width
    head = nearest_interior_point(mask, mask_centroid(mask))
    bb = mask_bbox(mask)
    diag = math.hypot(bb.width, bb.height)
    tail = None
    for _ in range(32):
        ang = float(rng.uniform(0.0, 2.0 * math.pi))
        dist = 1.5 * diag * float(rng.uniform(0.2, 0.4))
        cand = (head.x + dist * math.cos(ang), head.y + dist * math.sin(ang))
        xi, yi = int(round(cand[0])), int(round(cand[1]))
        if 0 <= xi < w and 0 <= yi < h and not mask.bits[yi, xi]:
            tail = cand
            break
    if tail is None:
        # fall back to the on-canvas pixel farthest from the mask
        dist_out = ndimage.distance_transform_edt(~mask.bits)
        yi, xi = np.unravel_index(int(np.argmax(dist_out)), dist_out.shape)
        if mask.bits[yi, xi]:
            raise DegenerateMaskError("arrow: no exterior pixel available for the tail")
        tail = (float(xi), float(yi))

    shaft = np.array([tail, [head.x, head.y]], dtype=np.float64)
    back = math.atan2(tail[1] - head.y, tail[0] - head.x)
    barb_len = 4.0 * style.stroke_width
    barbs = []
    for sign in (-1.0, 1.0):
        a = back + sign * math.radians(30.0)
        barbs.append(np.array([[head.x, head.y],
                               [head.x + barb_len * math.cos(a),
                                head.y + barb_len * math.sin(a)]]))
    return np.concatenate([sample_polyline(shaft)]
                          + [sample_polyline(b) for b in barbs], axis=0)


def synthesize_prompt(mask: BinaryMask, kind: PromptKind, style: PromptStyle,
                      seed: int, anchor_frame: int = 0) -> PromptLayer:
    """Render one prompt kind over the mask's geometry.

    Deterministic for a fixed (mask, kind, style, seed). Raises EmptyMask
    for masks with no foreground, DegenerateMask when a scribble or arrow
    is requested on a mask whose bbox is thinner than 3 px.
    """
    if mask.is_empty():
        raise EmptyMaskError("synthesize_prompt: mask has no foreground pixels")
    kind = PromptKind(kind)
    h, w = mask.height, mask.width
    bb = mask_bbox(mask)
    if kind in (PromptKind.SCRIBBLE, PromptKind.ARROW) and \
            (bb.width < 3 or bb.height < 3):
        raise DegenerateMaskError(
            f"{kind.value}: mask bbox {bb.width}x{bb.height} is smaller than 3x3")
    rng = np.random.default_rng(seed)
    sw = style.stroke_width

    if kind == PromptKind.MASK:
        mark = mask.bits.copy()
        alpha = style.fill_alpha
    elif kind == PromptKind.MASK_CONTOUR:
        boundary = mask_boundary(mask.bits)
        dist = ndimage.distance_transform_edt(~boundary)
        mark = dist <= sw / 2.0
        alpha = style.stroke_alpha
    elif kind == PromptKind.RECTANGLE:
        mark = rect_outline(h, w, bb.min_x, bb.min_y, bb.max_x, bb.max_y, sw)
        alpha = style.stroke_alpha
    elif kind == PromptKind.ELLIPSE:
        cx, cy = (bb.min_x + bb.max_x) / 2.0, (bb.min_y + bb.max_y) / 2.0
        a, b = (bb.max_x - bb.min_x) / 2.0, (bb.max_y - bb.min_y) / 2.0
        mark = stroke_from_path(sample_ellipse(cx, cy, a, b), h, w, sw)
        alpha = style.stroke_alpha
    elif kind == PromptKind.TRIANGLE:
        cx = (bb.min_x + bb.max_x) / 2.0
        path = sample_polyline([(cx, bb.min_y), (bb.min_x, bb.max_y),
                                (bb.max_x, bb.max_y)], closed=True)
        mark = stroke_from_path(path, h, w, sw)
        alpha = style.stroke_alpha
    elif kind == PromptKind.SCRIBBLE:
        mark = stroke_from_path(_scribble_path(mask, style, rng), h, w, sw)
        alpha = style.stroke_alpha
    elif kind == PromptKind.ARROW:
        mark = stroke_from_path(_arrow_path(mask, style, rng), h, w, sw)
        alpha = style.stroke_alpha
    else:  # PromptKind.POINT
        c = mask_centroid(mask)
        ci, cj = int(round(c.y)), int(round(c.x))
        if not (0 <= ci < h and 0 <= cj < w and mask.bits[ci, cj]):
            c = nearest_interior_point(mask, c)
        mark = disc(h, w, c.x, c.y, float(sw))
        alpha = style.fill_alpha

    if not mark.any() or alpha == 0:
        raise EmptyMarkError(f"synthesize_prompt produced an empty {kind.value} mark")
    return _compose_layer(mark, alpha, style, kind, anchor_frame)


# --- validity ----------------------------------------------------------------

@dataclass
class ValidityReport:
    valid: bool
    violations: list[str] = field(default_factory=list)


def _estimate_stroke_width(mark: np.ndarray) -> int:
    """Thickness of the mark: twice the deepest interior distance."""
    dist = ndimage.distance_transform_edt(mark)
    return max(1, int(round(2.0 * float(dist.max()))))


def validate_prompt(layer: PromptLayer, mask: BinaryMask, kind: PromptKind,
                    stroke_width: int | None = None) -> ValidityReport:
    """Check the per-kind validity predicate. Report-only, never raises for
    invalid content (dimension mismatch is still a contract violation).

    With ``stroke_width`` omitted, the tolerance is estimated from the
    mark's own thickness.
    """
    if (layer.width, layer.height) != (mask.width, mask.height):
        raise ContractViolation("validate_prompt: layer/mask dimensions differ")
    kind = PromptKind(kind)
    mark = layer.mark
    violations: list[str] = []
    if not mark.any():
        return ValidityReport(False, ["mark is empty"])
    sw = stroke_width if stroke_width is not None else _estimate_stroke_width(mark)

    if kind == PromptKind.MASK:
        if not np.array_equal(mark, mask.bits):
            violations.append("mask kind: marked pixels differ from mask pixels")
    elif kind == PromptKind.MASK_CONTOUR:
        boundary = mask_boundary(mask.bits)
        if not boundary.any():
            violations.append("mask has no boundary")
        else:
            dist_to_boundary = ndimage.distance_transform_edt(~boundary)
            if float(dist_to_boundary[mark].max()) > sw:
                violations.append("contour: marked pixel farther than one stroke "
                                  "width from the mask boundary")
            dist_to_mark = ndimage.distance_transform_edt(~mark)
            covered = (dist_to_mark[boundary] <= sw).mean()
            if covered < 0.95:
                violations.append("contour: mark covers under 95% of the boundary")
    elif kind in (PromptKind.RECTANGLE, PromptKind.ELLIPSE, PromptKind.TRIANGLE):
        mb = mask_bbox(mask)
        ys, xs = np.nonzero(mark)
        lb = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
        deviations = (abs(lb[0] - mb.min_x), abs(lb[1] - mb.min_y),
                      abs(lb[2] - mb.max_x), abs(lb[3] - mb.max_y))
        if max(deviations) > sw:
            violations.append(f"{kind.value}: mark bbox deviates from mask bbox "
                              f"by {max(deviations)} px (> stroke width {sw})")
        # outline shapes must leave the bbox center unmarked; the probe disc
        # must clear the triangle's slanted edges (~0.22 x bbox from center)
        bw, bh = mb.width, mb.height
        if min(bw, bh) >= 10 * sw:
            ccx, ccy = (mb.min_x + mb.max_x) / 2.0, (mb.min_y + mb.max_y) / 2.0
            hole = disc(mask.height, mask.width, ccx, ccy,
                        max(1.0, min(bw, bh) / 8.0))
            if (mark & hole).any():
                violations.append(f"{kind.value}: mark fills the bbox center "
                                  "(expected an outline)")
    elif kind == PromptKind.SCRIBBLE:
        labels, n = ndimage.label(mark, structure=np.ones((3, 3), dtype=int))
        if n != 1:
            violations.append(f"scribble: mark has {n} connected components")
        inside = float((mark & mask.bits).sum()) / float(mark.sum())
        if inside < 0.8:
            violations.append(f"scribble: only {inside:.0%} of the mark lies "
                              "inside the mask (needs >= 80%)")
    elif kind == PromptKind.ARROW:
        if not (mark & mask.bits).any():
            violations.append("arrow: no marked pixel inside the mask (tip missing)")
        if not (mark & ~mask.bits).any():
            violations.append("arrow: no marked pixel outside the mask (tail missing)")
    else:  # PromptKind.POINT
        ys, xs = np.nonzero(mark)
        cx, cy = int(round(xs.mean())), int(round(ys.mean()))
        if not mask.bits[cy, cx]:
            violations.append("point: disc center falls outside the mask")

    return ValidityReport(not violations, violations)
