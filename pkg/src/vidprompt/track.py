"""Point seeding and bi-directional tracking through a clip.

The built-in tracker is a classical pyramidal iterative least-squares flow
solver (coarse-to-fine, template gradients, translation-only warp). It sits
behind the ``PointTracker`` protocol so an oracle fed ground-truth motion
can replace it in tests and ablations; everything downstream only sees
``TrackedPointSet``.

Solver conventions:

* Grayscale is integer-weighted luma round(0.299 R + 0.587 G + 0.114 B),
  computed exactly in integer arithmetic.
* Windows are sampled bilinearly; a point whose window (plus a 1-px margin
  for gradients/interpolation) leaves the image at full resolution is
  marked failed with an infinite residual. At coarser pyramid levels the
  point simply skips the level instead.
* Rank-deficient normal matrices (det < 1e-6, e.g. textureless windows)
  yield a zero update rather than a failure; visibility is then governed
  by the residual alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import ContractViolation, EmptyClipError
from .raster import Frame, PointF

_DET_EPS = 1e-6


@dataclass(frozen=True)
class TrackerConfig:
    pyramid_levels: int = 3
    window: int = 15
    max_iterations: int = 30
    convergence_eps: float = 0.03
    residual_threshold: float = 20.0
    max_points: int = 64
    seed_radius: float | None = None  # None = auto (scaled to the mark)

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ContractViolation("TrackerConfig.window must be odd and >= 3")
        if self.pyramid_levels < 1:
            raise ContractViolation("TrackerConfig.pyramid_levels must be >= 1")
        if self.max_points < 1:
            raise ContractViolation("TrackerConfig.max_points must be >= 1")


@dataclass
class TrackedPointSet:
    """Per-frame positions and visibility for a fixed set of points.

    ``positions`` is (T, N, 2) in (x, y); ``visible`` is (T, N). At the
    anchor frame every point is visible at its seed position; once a point
    goes invisible in a direction it stays invisible and carries its last
    visible position.
    """

    positions: np.ndarray
    visible: np.ndarray
    anchor_frame: int

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_points(self) -> int:
        return self.positions.shape[1]

    def visible_fraction(self, frame: int) -> float:
        return float(self.visible[frame].mean())

    def to_json_obj(self) -> dict:
        frames = []
        for i in range(self.num_frames):
            pts = [[float(x), float(y), bool(v)]
                   for (x, y), v in zip(self.positions[i], self.visible[i])]
            frames.append({"idx": i, "pts": pts})
        return {"anchor": self.anchor_frame, "num_points": self.num_points,
                "frames": frames}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TrackedPointSet":
        frames = sorted(obj["frames"], key=lambda f: f["idx"])
        positions = np.array([[[p[0], p[1]] for p in f["pts"]] for f in frames],
                             dtype=np.float64)
        visible = np.array([[bool(p[2]) for p in f["pts"]] for f in frames])
        return cls(positions, visible, int(obj["anchor"]))

    @classmethod
    def from_json(cls, text: str) -> "TrackedPointSet":
        return cls.from_json_obj(json.loads(text))


class PointTracker(Protocol):
    """Anything that can chase seed points through a clip."""

    def track(self, frames: Sequence[Frame], points: Sequence[PointF],
              anchor: int) -> TrackedPointSet: ...


def seed_points(center: PointF, radius: float, max_points: int) -> list[PointF]:
    """Integer-lattice pixel centers within ``radius`` of ``center``.

    When the disc holds more than ``max_points`` lattice points, keep a
    regular sub-grid that always preserves the pixel nearest the center.
    Seeding never clips to image bounds; out-of-frame points fail at
    tracking time instead.
    """
    if radius <= 0:
        raise ContractViolation("seed_points: radius must be > 0")
    cx, cy = center
    xs = np.arange(int(np.ceil(cx - radius)), int(np.floor(cx + radius)) + 1)
    ys = np.arange(int(np.ceil(cy - radius)), int(np.floor(cy + radius)) + 1)
    gx, gy = np.meshgrid(xs, ys)
    inside = (gx - cx) ** 2 + (gy - cy) ** 2 <= radius * radius
    px, py = gx[inside], gy[inside]
    if px.size == 0:
        # the pixel containing the center is always a valid seed
        px = np.array([int(np.floor(cx + 0.5))])
        py = np.array([int(np.floor(cy + 0.5))])
    if px.size > max_points:
        ax, ay = int(np.floor(cx + 0.5)), int(np.floor(cy + 0.5))
        stride = 2
        while True:
            keep = ((px - ax) % stride == 0) & ((py - ay) % stride == 0)
            if keep.sum() <= max_points:
                break
            stride += 1
        px, py = px[keep], py[keep]
    return [PointF(float(x), float(y)) for x, y in zip(px, py)]


def to_gray(frame: Frame) -> np.ndarray:
    """Integer-weighted luma, bit-stable: round-half-up of the weighted sum."""
    p = frame.pixels.astype(np.uint32)
    return ((299 * p[:, :, 0] + 587 * p[:, :, 1] + 114 * p[:, :, 2] + 500)
            // 1000).astype(np.uint8)


def _build_pyramid(gray: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [gray.astype(np.float64)]
    for _ in range(1, levels):
        prev = pyr[-1]
        h, w = prev.shape
        if min(h, w) < 4:
            break
        he, we = h - h % 2, w - w % 2
        down = prev[:he, :we].reshape(he // 2, 2, we // 2, 2).mean(axis=(1, 3))
        pyr.append(down)
    return pyr


def _bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    i00 = img[y0, x0]
    i01 = img[y0, x0 + 1]
    i10 = img[y0 + 1, x0]
    i11 = img[y0 + 1, x0 + 1]
    return (i00 * (1 - fx) * (1 - fy) + i01 * fx * (1 - fy)
            + i10 * (1 - fx) * fy + i11 * fx * fy)


def _margin(window: int) -> float:
    return window // 2 + 2.0


def _in_margin(x: np.ndarray, y: np.ndarray, shape: tuple[int, int],
               window: int) -> np.ndarray:
    m = _margin(window)
    h, w = shape
    return (x >= m) & (x <= w - 1 - m) & (y >= m) & (y <= h - 1 - m)


def lk_track_step(prev_gray: np.ndarray, next_gray: np.ndarray,
                  points: np.ndarray, cfg: TrackerConfig
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Track ``points`` (N, 2) from ``prev_gray`` into ``next_gray``.

    Returns (new_points (N, 2), residuals (N,)). The residual is the mean
    absolute intensity error over the window at the solved position; points
    whose window leaves the valid region at full resolution get ``inf``.
    """
    if prev_gray.shape != next_gray.shape:
        raise ContractViolation("lk_track_step: frame dimensions differ")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = pts.shape[0]
    disp = np.zeros((n, 2), dtype=np.float64)
    residuals = np.full(n, np.inf, dtype=np.float64)
    if n == 0:
        return pts.copy(), residuals

    prev_pyr = _build_pyramid(prev_gray, cfg.pyramid_levels)
    next_pyr = _build_pyramid(next_gray, cfg.pyramid_levels)
    hw = cfg.window // 2
    off = np.arange(-hw, hw + 1, dtype=np.float64)
    ox, oy = np.meshgrid(off, off)

    usable = [lvl for lvl in range(len(prev_pyr))
              if min(prev_pyr[lvl].shape) >= 2 * _margin(cfg.window) + 2]
    for lvl in sorted(usable, reverse=True):
        scale = 2.0 ** lvl
        prev_l, next_l = prev_pyr[lvl], next_pyr[lvl]
        pl = pts / scale
        dl = disp / scale
        active = _in_margin(pl[:, 0], pl[:, 1], prev_l.shape, cfg.window)
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            continue
        # template windows and gradients, fixed for the whole level
        tx = pl[idx, 0][:, None, None] + ox[None]
        ty = pl[idx, 1][:, None, None] + oy[None]
        tmpl = _bilinear(prev_l, tx, ty)
        gx = (_bilinear(prev_l, tx + 1.0, ty) - _bilinear(prev_l, tx - 1.0, ty)) / 2.0
        gy = (_bilinear(prev_l, tx, ty + 1.0) - _bilinear(prev_l, tx, ty - 1.0)) / 2.0
        gxx = (gx * gx).sum(axis=(1, 2))
        gxy = (gx * gy).sum(axis=(1, 2))
        gyy = (gy * gy).sum(axis=(1, 2))
        det = gxx * gyy - gxy * gxy
        solvable = det >= _DET_EPS

        d = dl[idx].copy()
        live = np.ones(idx.size, dtype=bool)
        for _ in range(cfg.max_iterations):
            if not live.any():
                break
            li = np.nonzero(live)[0]
            ok = _in_margin(pl[idx[li], 0] + d[li, 0], pl[idx[li], 1] + d[li, 1],
                            next_l.shape, cfg.window)
            # out-of-margin points freeze at their current estimate
            live[li[~ok]] = False
            li = li[ok]
            if li.size == 0:
                break
            qx = tx[li] + d[li, 0][:, None, None]
            qy = ty[li] + d[li, 1][:, None, None]
            err = tmpl[li] - _bilinear(next_l, qx, qy)
            bx = (err * gx[li]).sum(axis=(1, 2))
            by = (err * gy[li]).sum(axis=(1, 2))
            s = solvable[li]
            du = np.zeros(li.size)
            dv = np.zeros(li.size)
            du[s] = (gyy[li][s] * bx[s] - gxy[li][s] * by[s]) / det[li][s]
            dv[s] = (gxx[li][s] * by[s] - gxy[li][s] * bx[s]) / det[li][s]
            d[li, 0] += du
            d[li, 1] += dv
            done = np.hypot(du, dv) < cfg.convergence_eps
            live[li[done]] = False
            live[li[~s]] = False  # rank-deficient: single zero update, stop
        dl[idx] = d
        disp[idx] = dl[idx] * scale

    # final validity and residual at full resolution
    final = pts + disp
    base = _in_margin(pts[:, 0], pts[:, 1], prev_gray.shape, cfg.window)
    landed = _in_margin(final[:, 0], final[:, 1], next_gray.shape, cfg.window)
    good = np.nonzero(base & landed)[0]
    if good.size:
        g0 = prev_pyr[0]
        g1 = next_pyr[0]
        tx = pts[good, 0][:, None, None] + ox[None]
        ty = pts[good, 1][:, None, None] + oy[None]
        qx = final[good, 0][:, None, None] + ox[None]
        qy = final[good, 1][:, None, None] + oy[None]
        diff = np.abs(_bilinear(g0, tx, ty) - _bilinear(g1, qx, qy))
        residuals[good] = diff.mean(axis=(1, 2))
    return final, residuals


@dataclass
class LucasKanadeTracker:
    """Chains lk_track_step frame-to-frame, forward then backward."""

    cfg: TrackerConfig = field(default_factory=TrackerConfig)

    def track(self, frames: Sequence[Frame], points: Sequence[PointF],
              anchor: int) -> TrackedPointSet:
        return track_bidirectional(frames, points, anchor, self.cfg)


@dataclass
class OracleTracker:
    """Tracker fed ground-truth per-frame translation offsets (T, 2).

    position[t] = seed + offsets[t] - offsets[anchor]; everything visible
    while it stays on-frame. Only the schema is shared with the classical
    tracker; downstream modules cannot tell them apart.
    """

    offsets: np.ndarray

    def track(self, frames: Sequence[Frame], points: Sequence[PointF],
              anchor: int) -> TrackedPointSet:
        t = len(frames)
        if t < 1:
            raise EmptyClipError("OracleTracker: clip has no frames")
        off = np.asarray(self.offsets, dtype=np.float64).reshape(t, 2)
        seeds = np.asarray([[p.x, p.y] for p in points], dtype=np.float64)
        positions = seeds[None, :, :] + (off[:, None, :] - off[anchor][None, None, :])
        h, w = frames[0].height, frames[0].width
        visible = ((positions[:, :, 0] >= 0) & (positions[:, :, 0] <= w - 1)
                   & (positions[:, :, 1] >= 0) & (positions[:, :, 1] <= h - 1))
        visible[anchor, :] = True
        return TrackedPointSet(positions, visible, anchor)


def track_bidirectional(frames: Sequence[Frame], points: Sequence[PointF],
                        anchor: int, cfg: TrackerConfig) -> TrackedPointSet:
    """Chain frame-to-frame solves from the anchor out to both clip ends.

    Within a direction visibility is monotone: a point that exits the valid
    region or whose residual exceeds the threshold stays invisible and
    carries its last visible position.
    """
    t = len(frames)
    if t < 1:
        raise EmptyClipError("track_bidirectional: clip has no frames")
    if not (0 <= anchor < t):
        raise ContractViolation(f"anchor {anchor} outside clip of {t} frames")
    if len(points) == 0:
        raise ContractViolation("track_bidirectional: no seed points")

    seeds = np.asarray([[p.x, p.y] for p in points], dtype=np.float64)
    n = seeds.shape[0]
    positions = np.tile(seeds[None, :, :], (t, 1, 1))
    visible = np.zeros((t, n), dtype=bool)
    visible[anchor] = True

    grays = [to_gray(f) for f in frames]

    for step in (1, -1):
        cur = seeds.copy()
        alive = np.ones(n, dtype=bool)
        rng_frames = range(anchor, t - 1) if step == 1 else range(anchor, 0, -1)
        for i in rng_frames:
            j = i + step
            if alive.any():
                live_idx = np.nonzero(alive)[0]
                new_pos, res = lk_track_step(grays[i], grays[j], cur[live_idx], cfg)
                ok = np.isfinite(res) & (res <= cfg.residual_threshold)
                cur[live_idx[ok]] = new_pos[ok]
                alive[live_idx[~ok]] = False
            positions[j] = cur
            visible[j] = alive
    return TrackedPointSet(positions, visible, anchor)
