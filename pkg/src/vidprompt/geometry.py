"""Planar geometry helpers: smallest enclosing circle and stroke rasterization.

The enclosing-circle solver is the classic randomized incremental scheme
(expected linear time); the shuffle is driven by a fixed seed so identical
inputs always give identical output.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage


class Circle(NamedTuple):
    x: float
    y: float
    r: float


_EPS_FACTOR = 1.0 + 1e-12


def _in_circle(c: Circle | None, px: float, py: float) -> bool:
    return c is not None and math.hypot(px - c.x, py - c.y) <= c.r * _EPS_FACTOR


def _circle_from_two(ax, ay, bx, by) -> Circle:
    cx = (ax + bx) / 2.0
    cy = (ay + by) / 2.0
    r = max(math.hypot(cx - ax, cy - ay), math.hypot(cx - bx, cy - by))
    return Circle(cx, cy, r)


def _circle_from_three(ax, ay, bx, by, cx, cy) -> Circle | None:
    # circumcircle; translate to the bbox midpoint first for conditioning
    ox = (min(ax, bx, cx) + max(ax, bx, cx)) / 2.0
    oy = (min(ay, by, cy) + max(ay, by, cy)) / 2.0
    ax, ay, bx, by, cx, cy = ax - ox, ay - oy, bx - ox, by - oy, cx - ox, cy - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0
    if d == 0.0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
              + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
              + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - (ax + ox), y - (ay + oy)),
            math.hypot(x - (bx + ox), y - (by + oy)),
            math.hypot(x - (cx + ox), y - (cy + oy)))
    return Circle(x, y, r)


def _one_boundary(pts, px, py) -> Circle:
    c = Circle(px, py, 0.0)
    for i, (qx, qy) in enumerate(pts):
        if not _in_circle(c, qx, qy):
            if c.r == 0.0:
                c = _circle_from_two(px, py, qx, qy)
            else:
                c = _two_boundary(pts[: i + 1], px, py, qx, qy)
    return c


def _two_boundary(pts, px, py, qx, qy) -> Circle:
    circ = _circle_from_two(px, py, qx, qy)
    left: Circle | None = None
    right: Circle | None = None
    for rx, ry in pts:
        if _in_circle(circ, rx, ry):
            continue
        cross = (qx - px) * (ry - py) - (qy - py) * (rx - px)
        c = _circle_from_three(px, py, qx, qy, rx, ry)
        if c is None:
            continue
        c_cross = (qx - px) * (c.y - py) - (qy - py) * (c.x - px)
        if cross > 0.0 and (left is None or c_cross >
                            (qx - px) * (left.y - py) - (qy - py) * (left.x - px)):
            left = c
        elif cross < 0.0 and (right is None or c_cross <
                              (qx - px) * (right.y - py) - (qy - py) * (right.x - px)):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right  # type: ignore[return-value]
    if right is None:
        return left
    return left if left.r <= right.r else right


def min_enclosing_circle(points: np.ndarray) -> Circle:
    """Smallest circle containing every point of the (N, 2) array."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("min_enclosing_circle: need at least one point")
    order = np.random.default_rng(0x2F9A11).permutation(pts.shape[0])
    shuffled = [(float(pts[i, 0]), float(pts[i, 1])) for i in order]
    c: Circle | None = None
    for i, (px, py) in enumerate(shuffled):
        if not _in_circle(c, px, py):
            c = _one_boundary(shuffled[: i + 1], px, py)
    assert c is not None
    return c


# --- stroke rasterization ---------------------------------------------------
#
# Strokes are drawn by sampling the ideal path densely (spacing well under a
# pixel), stamping the samples onto the pixel grid, and marking every pixel
# whose center lies within half the stroke width of a stamped sample
# (Euclidean distance transform). Path samples falling off-canvas are simply
# dropped, which clips the stroke at the image edge.

_PATH_SPACING = 0.3


def sample_segment(p0, p1, spacing: float = _PATH_SPACING) -> np.ndarray:
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    length = float(np.hypot(*(p1 - p0)))
    n = max(2, int(math.ceil(length / spacing)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return p0[None, :] * (1 - t) + p1[None, :] * t


def sample_polyline(points, closed: bool = False,
                    spacing: float = _PATH_SPACING) -> np.ndarray:
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if closed:
        pts = pts + [pts[0]]
    parts = [sample_segment(pts[i], pts[i + 1], spacing)
             for i in range(len(pts) - 1)]
    if not parts:
        return np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    return np.concatenate(parts, axis=0)


def sample_quad_bezier(p0, ctrl, p1, spacing: float = _PATH_SPACING) -> np.ndarray:
    p0 = np.asarray(p0, dtype=np.float64)
    c = np.asarray(ctrl, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    # chord + control polygon bounds the arc length
    approx_len = np.hypot(*(c - p0)) + np.hypot(*(p1 - c))
    n = max(4, int(math.ceil(approx_len / spacing)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * c + t ** 2 * p1


def sample_ellipse(cx: float, cy: float, a: float, b: float,
                   spacing: float = _PATH_SPACING) -> np.ndarray:
    if a <= 0.0 and b <= 0.0:
        return np.array([[cx, cy]], dtype=np.float64)
    # Ramanujan perimeter approximation sets the sample count
    h = ((a - b) / (a + b)) ** 2 if (a + b) > 0 else 0.0
    perimeter = math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    n = max(16, int(math.ceil(perimeter / spacing)))
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=1)


def sample_circle(cx: float, cy: float, r: float,
                  spacing: float = _PATH_SPACING) -> np.ndarray:
    return sample_ellipse(cx, cy, r, r, spacing)


def stamp_points(points: np.ndarray, height: int, width: int) -> np.ndarray:
    """Round path samples to pixel centers; off-canvas samples are dropped."""
    seeds = np.zeros((height, width), dtype=bool)
    if points.size == 0:
        return seeds
    xs = np.rint(points[:, 0]).astype(np.int64)
    ys = np.rint(points[:, 1]).astype(np.int64)
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    seeds[ys[keep], xs[keep]] = True
    return seeds


def stroke_from_path(points: np.ndarray, height: int, width: int,
                     stroke_width: int) -> np.ndarray:
    """Boolean raster of a stroke of the given width along the path."""
    seeds = stamp_points(points, height, width)
    if not seeds.any():
        return seeds
    dist = ndimage.distance_transform_edt(~seeds)
    return dist <= stroke_width / 2.0


def disc(height: int, width: int, cx: float, cy: float, r: float) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r


def ring(height: int, width: int, cx: float, cy: float, r: float,
         stroke_width: int) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    d = np.hypot(xs - cx, ys - cy)
    half = stroke_width / 2.0
    return np.abs(d - r) <= half


def rect_outline(height: int, width: int, x0: float, y0: float, x1: float,
                 y1: float, stroke_width: int) -> np.ndarray:
    """Band of pixels within half a stroke of the rectangle through the
    corner pixel centers (signed-distance formulation, exact)."""
    ys, xs = np.mgrid[0:height, 0:width]
    dx = np.maximum(np.maximum(x0 - xs, xs - x1), 0.0)
    dy = np.maximum(np.maximum(y0 - ys, ys - y1), 0.0)
    outside = np.hypot(dx, dy)
    inside = np.minimum(np.minimum(xs - x0, x1 - xs),
                        np.minimum(ys - y0, y1 - ys))
    sdf = np.where((dx > 0) | (dy > 0), outside, -np.maximum(inside, 0.0))
    return np.abs(sdf) <= stroke_width / 2.0
