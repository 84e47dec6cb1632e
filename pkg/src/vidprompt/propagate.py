"""Propagate a single authored prompt layer across a whole clip.

Modes:

* ``stom``    seed pixels in a disc around the mark centroid, track them
              bi-directionally, and redraw a covering mark per frame.
* ``none``    keep the authored layer at its anchor frame only; every other
              frame gets a fully transparent layer (the no-propagation
              baseline).
* ``oracle``  regenerate the prompt per frame from ground-truth masks
              (upper-bound reference mode).

The authored layer is always preserved verbatim at the anchor frame. When
tracking visibility collapses below ``min_visible_fraction`` the frame gets
a transparent layer rather than a stale frozen mark; the visibility
fractions and circle parameters are kept on the result for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ContractViolation, EmptyClipError, EmptyMarkError, EmptyMaskError
from .geometry import Circle, disc, min_enclosing_circle, ring
from .raster import BinaryMask, Frame, PromptLayer, alpha_blend, mask_bbox, \
    mask_centroid
from .synth import PromptKind, PromptStyle, default_stroke_width, synthesize_prompt
from .track import LucasKanadeTracker, PointTracker, TrackedPointSet, TrackerConfig, \
    seed_points

_AUTO_RADIUS_MIN = 3.0
_AUTO_RADIUS_MAX = 16.0


class PropagationMode(str, Enum):
    STOM = "stom"
    NONE = "none"
    ORACLE = "oracle"


class RedrawMode(str, Enum):
    CIRCLE = "circle"
    ORIGINAL = "original"


@dataclass(frozen=True)
class PropagationConfig:
    mode: PropagationMode = PropagationMode.STOM
    redraw: RedrawMode = RedrawMode.CIRCLE
    min_visible_fraction: float = 0.25
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    style: PromptStyle | None = None  # None = inherit the authored mark's look

    def __post_init__(self):
        if not (0.0 <= self.min_visible_fraction <= 1.0):
            raise ContractViolation("min_visible_fraction must be in [0, 1]")


@dataclass
class PropagatedPrompt:
    """Per-frame prompt layers plus the tracking evidence behind them."""

    layers: list[PromptLayer]
    tracked: TrackedPointSet | None
    source_kind: str | None
    anchor_frame: int
    visible_fractions: list[float]
    circles: list[Circle | None]

    @property
    def num_frames(self) -> int:
        return len(self.layers)


def style_from_layer(layer: PromptLayer) -> PromptStyle:
    """Redraw style inheriting the authored mark's color and opacity."""
    mark = layer.mark
    if not mark.any():
        raise EmptyMarkError("style_from_layer: layer has no visible pixels")
    rgb = layer.pixels[:, :, :3][mark]
    alphas = layer.pixels[:, :, 3][mark]
    # dominant color/opacity = most frequent among marked pixels
    colors, counts = np.unique(rgb.reshape(-1, 3), axis=0, return_counts=True)
    color = tuple(int(c) for c in colors[int(np.argmax(counts))])
    vals, acounts = np.unique(alphas, return_counts=True)
    alpha = int(vals[int(np.argmax(acounts))])
    return PromptStyle(color=color, fill_alpha=alpha, stroke_alpha=alpha,
                       stroke_width=default_stroke_width(layer.width, layer.height))


def auto_seed_radius(layer: PromptLayer) -> float:
    """Half the minor axis of the mark bbox, clamped to [3, 16] px."""
    bb = mask_bbox(BinaryMask(layer.mark))
    return float(np.clip(min(bb.width, bb.height) / 2.0,
                         _AUTO_RADIUS_MIN, _AUTO_RADIUS_MAX))


def enclosing_circle(positions: np.ndarray, visible: np.ndarray,
                     style: PromptStyle, dims: tuple[int, int]) -> Circle:
    """Minimum enclosing circle of the visible points, radius clamped to
    [stroke_width, half the image diagonal]."""
    h, w = dims
    c = min_enclosing_circle(positions[visible])
    r = float(np.clip(c.r, float(style.stroke_width), 0.5 * math.hypot(w, h)))
    return Circle(c.x, c.y, r)


def redraw_layer(positions: np.ndarray, visible: np.ndarray,
                 cfg: PropagationConfig, dims: tuple[int, int],
                 style: PromptStyle, authored: PromptLayer | None = None,
                 seed_positions: np.ndarray | None = None) -> PromptLayer:
    """Draw the per-frame mark covering the visible tracked points.

    ``dims`` is (height, width). Circle mode draws the minimum enclosing
    circle outline (degenerating to a filled dot when the spread is within
    one stroke width); original mode re-stamps the authored mark shifted by
    the mean displacement of the visible points. Below the visibility
    cutoff the layer is fully transparent.
    """
    h, w = dims
    kind = authored.kind if authored is not None else None
    frac = float(visible.mean()) if visible.size else 0.0
    if frac < cfg.min_visible_fraction or not visible.any():
        return PromptLayer.transparent(w, h, kind=kind)

    if cfg.redraw == RedrawMode.ORIGINAL:
        if authored is None or seed_positions is None:
            raise ContractViolation(
                "redraw original: authored layer and seed positions required")
        delta = (positions[visible] - seed_positions[visible]).mean(axis=0)
        dx, dy = int(round(delta[0])), int(round(delta[1]))
        out = np.zeros_like(authored.pixels)
        src = authored.pixels
        x0s, x1s = max(0, -dx), min(w, w - dx)
        y0s, y1s = max(0, -dy), min(h, h - dy)
        if x1s > x0s and y1s > y0s:
            out[y0s + dy:y1s + dy, x0s + dx:x1s + dx] = src[y0s:y1s, x0s:x1s]
        return PromptLayer(out, kind=kind)

    circle = enclosing_circle(positions, visible, style, dims)
    if circle.r <= style.stroke_width:
        mark = disc(h, w, circle.x, circle.y, float(style.stroke_width))
        alpha = style.fill_alpha
    else:
        mark = ring(h, w, circle.x, circle.y, circle.r, style.stroke_width)
        alpha = style.stroke_alpha
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    rgba[mark, 0] = style.color[0]
    rgba[mark, 1] = style.color[1]
    rgba[mark, 2] = style.color[2]
    rgba[mark, 3] = alpha
    return PromptLayer(rgba, kind=kind)


def oracle_propagate(masks: Sequence[BinaryMask], kind: PromptKind,
                     style: PromptStyle, seed: int,
                     anchor_frame: int = 0) -> PropagatedPrompt:
    """Regenerate the prompt per frame from ground-truth masks.

    Frames with an empty mask get a transparent layer. The per-frame seeds
    are derived from (seed, frame index) so the stream is reproducible.
    """
    if len(masks) == 0:
        raise EmptyClipError("oracle_propagate: no masks")
    dims = (masks[0].width, masks[0].height)
    for m in masks:
        if (m.width, m.height) != dims:
            raise ContractViolation("oracle_propagate: mask dimensions differ")
    if all(m.is_empty() for m in masks):
        raise EmptyMaskError("oracle_propagate: every mask is empty")
    kind = PromptKind(kind)
    layers: list[PromptLayer] = []
    fractions: list[float] = []
    for i, m in enumerate(masks):
        if m.is_empty():
            layers.append(PromptLayer.transparent(dims[0], dims[1], kind=kind.value))
            fractions.append(0.0)
        else:
            frame_seed = int(np.random.default_rng([seed, i]).integers(2 ** 63))
            layers.append(synthesize_prompt(m, kind, style, frame_seed,
                                            anchor_frame=anchor_frame))
            fractions.append(1.0)
    return PropagatedPrompt(layers=layers, tracked=None, source_kind=kind.value,
                            anchor_frame=anchor_frame,
                            visible_fractions=fractions,
                            circles=[None] * len(masks))


def propagate_prompt(clip: Sequence[Frame], layer: PromptLayer, anchor: int,
                     cfg: PropagationConfig | None = None,
                     tracker: PointTracker | None = None,
                     oracle_masks: Sequence[BinaryMask] | None = None,
                     seed: int = 0) -> PropagatedPrompt:
    """Turn one authored prompt into per-frame layers for the whole clip."""
    cfg = cfg or PropagationConfig()
    t = len(clip)
    if t < 1:
        raise EmptyClipError("propagate_prompt: clip has no frames")
    if not (0 <= anchor < t):
        raise ContractViolation(f"anchor {anchor} outside clip of {t} frames")
    if (layer.width, layer.height) != (clip[0].width, clip[0].height):
        raise ContractViolation("propagate_prompt: layer/clip dimensions differ")
    if layer.is_empty():
        raise EmptyMarkError("propagate_prompt: authored layer has no visible pixels")
    h, w = clip[0].height, clip[0].width

    if cfg.mode == PropagationMode.NONE:
        layers = [PromptLayer.transparent(w, h, kind=layer.kind) for _ in range(t)]
        layers[anchor] = layer
        fracs = [0.0] * t
        fracs[anchor] = 1.0
        return PropagatedPrompt(layers=layers, tracked=None,
                                source_kind=layer.kind, anchor_frame=anchor,
                                visible_fractions=fracs, circles=[None] * t)

    if cfg.mode == PropagationMode.ORACLE:
        if oracle_masks is None:
            raise ContractViolation("oracle mode needs per-frame ground-truth masks")
        if len(oracle_masks) != t:
            raise ContractViolation("oracle mode: mask count differs from clip length")
        style = cfg.style or style_from_layer(layer)
        kind = PromptKind(layer.kind) if layer.kind else PromptKind.RECTANGLE
        result = oracle_propagate(oracle_masks, kind, style, seed,
                                  anchor_frame=anchor)
        result.layers[anchor] = layer  # anchor stays verbatim
        return result

    # tracked propagation
    style = cfg.style or style_from_layer(layer)
    center = mask_centroid(BinaryMask(layer.mark))
    radius = cfg.tracker.seed_radius if cfg.tracker.seed_radius is not None \
        else auto_seed_radius(layer)
    points = seed_points(center, radius, cfg.tracker.max_points)
    tracker = tracker or LucasKanadeTracker(cfg.tracker)
    tracked = tracker.track(clip, points, anchor)

    seeds = tracked.positions[anchor]
    layers = []
    fractions = []
    circles: list[Circle | None] = []
    for i in range(t):
        if i == anchor:
            layers.append(layer)
            fractions.append(1.0)
            circles.append(enclosing_circle(seeds, tracked.visible[anchor],
                                            style, (h, w)))
            continue
        vis = tracked.visible[i]
        frac = float(vis.mean())
        fractions.append(frac)
        if frac >= cfg.min_visible_fraction and vis.any():
            circles.append(enclosing_circle(tracked.positions[i], vis, style, (h, w)))
        else:
            circles.append(None)
        layers.append(redraw_layer(tracked.positions[i], vis, cfg, (h, w), style,
                                   authored=layer, seed_positions=seeds))
    return PropagatedPrompt(layers=layers, tracked=tracked,
                            source_kind=layer.kind, anchor_frame=anchor,
                            visible_fractions=fractions, circles=circles)


def overlay_video(clip: Sequence[Frame], prompt: PropagatedPrompt) -> list[Frame]:
    """Frame-wise alpha blend; pure, order-preserving, inputs untouched."""
    if len(clip) != prompt.num_frames:
        raise ContractViolation("overlay_video: clip/prompt lengths differ")
    return [alpha_blend(f, layer) for f, layer in zip(clip, prompt.layers)]
