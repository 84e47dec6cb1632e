"""Array-based bindings over the vidprompt engine for ML data pipelines.

Three functions cover the pipeline surface: ``bridge_synthesize`` (mask ->
RGBA prompt), ``bridge_propagate`` (clip + authored prompt -> per-frame
layers, overlays, visibility), and ``bridge_metrics`` (mask stacks ->
J/F/J&F). Each is bit-identical to the corresponding CLI output on equal
inputs; errors cross the boundary as ``BridgeError`` (a ``ValueError``)
carrying the core diagnostic's machine-readable ``code``.

Frames are exchanged as plain uint8 numpy arrays and are viewed without
copying whenever the input is already contiguous uint8 (see
``BridgeFrameView.owned``). The heavy kernels run inside numpy/scipy,
which release the interpreter lock; the core itself holds no global
state, so concurrent calls from multiple host threads are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import vidprompt
from vidprompt import (
    BinaryMask,
    Frame,
    PromptKind,
    PromptLayer,
    PropagationConfig,
    PropagationMode,
    RedrawMode,
    TrackerConfig,
    evaluate_sequence,
    overlay_video,
    propagate_prompt,
    synthesize_prompt,
)
from vidprompt.errors import VidPromptError
from vidprompt.synth import resolve_style

__version__ = vidprompt.__version__

_KIND_NAMES = tuple(k.value for k in PromptKind)


class BridgeError(ValueError):
    """Structured (code, message) pair mapped onto the host exception type."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class BridgeFrameView:
    """Validated view of a host buffer: (H, W, C) contiguous uint8.

    ``owned`` is False when the view borrows the caller's buffer directly
    (zero copy) and True when a contiguous uint8 copy had to be made. A
    view must not outlive the array it was built from.
    """

    array: np.ndarray
    height: int
    width: int
    channels: int
    owned: bool

    @classmethod
    def from_array(cls, arr, channels: int, what: str) -> "BridgeFrameView":
        a = np.asarray(arr)
        if a.ndim != 3 or a.shape[2] != channels:
            raise BridgeError("contract-violation",
                              f"{what}: expected (H, W, {channels}) array, "
                              f"got shape {a.shape}")
        out = np.ascontiguousarray(a, dtype=np.uint8)
        return cls(array=out, height=out.shape[0], width=out.shape[1],
                   channels=channels, owned=out is not a)


def _reraise(exc: VidPromptError):
    raise BridgeError(exc.code, str(exc)) from exc


def _style_from_dict(style: dict | None, width: int, height: int):
    style = style or {}
    unknown = set(style) - {"color", "fill_alpha", "stroke_alpha",
                            "stroke_width"}
    if unknown:
        raise BridgeError("contract-violation",
                          f"unknown style keys: {sorted(unknown)}")
    try:
        return resolve_style(width, height, color=style.get("color"),
                             fill_alpha=style.get("fill_alpha"),
                             stroke_alpha=style.get("stroke_alpha"),
                             stroke_width=style.get("stroke_width"))
    except VidPromptError as exc:
        _reraise(exc)


def _mask_from_array(mask, what: str) -> BinaryMask:
    a = np.asarray(mask)
    if a.ndim != 2:
        raise BridgeError("contract-violation",
                          f"{what}: expected an (H, W) mask array, got shape "
                          f"{a.shape}")
    return BinaryMask(a != 0)


def bridge_synthesize(mask, kind: str, style: dict | None = None,
                      seed: int = 0) -> np.ndarray:
    """Render one prompt kind over a mask array; returns (H, W, 4) uint8.

    ``style`` may set color (RGB triple), fill_alpha, stroke_alpha and
    stroke_width; unset fields use the same per-image defaults as the CLI.
    """
    if kind not in _KIND_NAMES:
        raise BridgeError("contract-violation",
                          f"unknown prompt kind {kind!r}; valid kinds: "
                          f"{', '.join(_KIND_NAMES)}")
    m = _mask_from_array(mask, "mask")
    st = _style_from_dict(style, m.width, m.height)
    try:
        layer = synthesize_prompt(m, PromptKind(kind), st, seed)
    except VidPromptError as exc:
        _reraise(exc)
    return layer.pixels


_TRACKER_KEYS = ("pyramid_levels", "window", "max_iterations",
                 "convergence_eps", "residual_threshold", "max_points",
                 "seed_radius")


def _config_from_dict(config: dict | None) -> tuple[PropagationConfig, int]:
    config = dict(config or {})
    seed = int(config.pop("seed", 0))
    tracker_kwargs = {k: config.pop(k) for k in _TRACKER_KEYS if k in config}
    known = {"mode", "redraw", "min_visible_fraction"}
    unknown = set(config) - known
    if unknown:
        raise BridgeError("contract-violation",
                          f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = PropagationConfig(
            mode=PropagationMode(config.get("mode", "stom")),
            redraw=RedrawMode(config.get("redraw", "circle")),
            min_visible_fraction=config.get("min_visible_fraction", 0.25),
            tracker=TrackerConfig(**tracker_kwargs))
    except VidPromptError as exc:
        _reraise(exc)
    except ValueError as exc:  # bad enum value
        raise BridgeError("contract-violation", str(exc)) from exc
    return cfg, seed


def bridge_propagate(frames, prompt, anchor: int,
                     config: dict | None = None, oracle_masks=None
                     ) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Propagate an authored RGBA prompt across a (T, H, W, 3) clip.

    Returns (layers (T, H, W, 4), overlay (T, H, W, 3), per-frame visible
    fractions). ``config`` accepts mode/redraw/min_visible_fraction, the
    tracker settings, and the oracle seed.
    """
    f = np.asarray(frames)
    if f.ndim != 4 or f.shape[3] != 3:
        raise BridgeError("contract-violation",
                          f"frames: expected (T, H, W, 3), got shape {f.shape}")
    views = [BridgeFrameView.from_array(f[t], 3, f"frame {t}")
             for t in range(f.shape[0])]
    clip = [Frame(v.array, index=t) for t, v in enumerate(views)]
    prompt_view = BridgeFrameView.from_array(prompt, 4, "prompt")
    layer = PromptLayer(prompt_view.array, anchor_frame=anchor)
    cfg, seed = _config_from_dict(config)
    masks = None
    if oracle_masks is not None:
        om = np.asarray(oracle_masks)
        if om.ndim != 3:
            raise BridgeError("contract-violation",
                              "oracle_masks: expected (T, H, W)")
        masks = [_mask_from_array(om[t], f"oracle mask {t}")
                 for t in range(om.shape[0])]
    try:
        pp = propagate_prompt(clip, layer, anchor, cfg, oracle_masks=masks,
                              seed=seed)
        blended = overlay_video(clip, pp)
    except VidPromptError as exc:
        _reraise(exc)
    layers = np.stack([lay.pixels for lay in pp.layers], axis=0)
    overlay = np.stack([fr.pixels for fr in blended], axis=0)
    return layers, overlay, list(pp.visible_fractions)


def bridge_metrics(pred, gt, tolerance: int | None = None) -> dict:
    """J / F / J&F of two (T, H, W) mask stacks, frame-wise averaged."""
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.ndim == 2:
        p = p[None]
    if g.ndim == 2:
        g = g[None]
    if p.ndim != 3 or g.ndim != 3 or p.shape != g.shape:
        raise BridgeError("contract-violation",
                          f"pred/gt stacks must share an (T, H, W) shape, got "
                          f"{p.shape} vs {g.shape}")
    preds = [BinaryMask(p[t] != 0) for t in range(p.shape[0])]
    gts = [BinaryMask(g[t] != 0) for t in range(g.shape[0])]
    try:
        j, f = evaluate_sequence(preds, gts, tolerance)
    except VidPromptError as exc:
        _reraise(exc)
    return {"J": j, "F": f, "JF": (j + f) / 2.0}


__all__ = ["BridgeError", "BridgeFrameView", "bridge_synthesize",
           "bridge_propagate", "bridge_metrics", "__version__"]
