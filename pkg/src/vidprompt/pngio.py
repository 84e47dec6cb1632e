"""PNG file exchange for frames, masks, and prompt layers.

Clips are directories of zero-padded ``%05d.png`` frames; video containers
are out of scope. Masks are 8-bit gray PNGs: any nonzero value reads as
foreground, foreground writes as 255.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ContractViolation
from .raster import BinaryMask, Frame, PromptLayer

_NUMERIC_STEM = re.compile(r"^\d+$")


def frame_filename(index: int) -> str:
    return f"{index:05d}.png"


def read_frame(path: str | Path, index: int = 0) -> Frame:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return Frame(arr, index=index)


def write_frame(frame: Frame, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.pixels, mode="RGB").save(path, format="PNG")


def read_mask(path: str | Path) -> BinaryMask:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return BinaryMask(arr != 0)


def write_mask(mask: BinaryMask, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_layer(path: str | Path, kind: str | None = None,
               anchor_frame: int = 0) -> PromptLayer:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGBA"), dtype=np.uint8)
    return PromptLayer(arr, kind=kind, anchor_frame=anchor_frame)


def write_layer(layer: PromptLayer, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(layer.pixels, mode="RGBA").save(path, format="PNG")


def _numbered_pngs(directory: Path) -> list[tuple[int, Path]]:
    entries = []
    for p in sorted(directory.glob("*.png")):
        if _NUMERIC_STEM.match(p.stem):
            entries.append((int(p.stem), p))
    entries.sort(key=lambda t: t[0])
    return entries


def read_clip(directory: str | Path) -> list[Frame]:
    """Load all numerically named PNG frames, sorted by frame number."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractViolation(f"clip directory not found: {directory}")
    entries = _numbered_pngs(directory)
    if not entries:
        raise ContractViolation(f"no numbered .png frames under {directory}")
    return [read_frame(p, index=i) for i, (_, p) in enumerate(entries)]


def write_clip(frames: list[Frame], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, fr in enumerate(frames):
        write_frame(fr, directory / frame_filename(i))


def read_mask_dir(directory: str | Path) -> list[BinaryMask]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractViolation(f"mask directory not found: {directory}")
    entries = _numbered_pngs(directory)
    if not entries:
        raise ContractViolation(f"no numbered .png masks under {directory}")
    return [read_mask(p) for _, p in entries]


def write_layers(layers: list[PromptLayer], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, layer in enumerate(layers):
        write_layer(layer, directory / frame_filename(i))


def read_layers(directory: str | Path) -> list[PromptLayer]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractViolation(f"layer directory not found: {directory}")
    entries = _numbered_pngs(directory)
    if not entries:
        raise ContractViolation(f"no numbered .png layers under {directory}")
    return [read_layer(p, anchor_frame=0) for _, p in entries]
