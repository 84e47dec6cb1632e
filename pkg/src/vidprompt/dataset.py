"""Ingest mask-annotated videos, build instruction records, validate and
summarize the resulting JSONL dataset.

On-disk layout (this toolkit's own format):

* mask root:     ``<root>/<video>/<object>/<frame>.png`` gray masks,
                 numeric frame stems, any nonzero pixel = foreground.
* QA sidecars:   ``<qa_root>/<video>/<object>/qa.json`` holding a list of
                 ``{"question": ..., "answer": ...}`` objects. QA text is
                 never invented by the tooling.
* dataset file:  JSONL, one record per line, UTF-8, sorted by sample_id;
                 asset paths are relative to the JSONL's directory.

Each record prompts exactly one frame per (video, object): the prompt frame
is drawn uniformly (seeded) among frames where the object's mask is
non-empty, the prompt kind uniformly among the eight kinds.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, EmptyDatasetError, EmptyObjectError
from .pngio import read_mask, write_layer
from .raster import BinaryMask
from .synth import ALL_KINDS, PromptKind, default_style, random_prompt_kind, \
    synthesize_prompt
from .textmetrics import tokenize

SPLITS = ("train", "test")


@dataclass
class AnnotationGroup:
    """Lazily-loadable mask sequence for one (video, object)."""

    video_id: str
    object_id: str
    frame_numbers: list[int]
    mask_paths: list[Path]

    @property
    def num_frames(self) -> int:
        return len(self.mask_paths)

    def load_mask(self, ordinal: int) -> BinaryMask:
        return read_mask(self.mask_paths[ordinal])


@dataclass
class InstructRecord:
    sample_id: str
    video_dir: str
    num_frames: int
    object_id: str
    prompt_frame: int
    prompt_kind: str
    prompt_layer: str
    qa: list[dict]
    split: str

    def to_json_obj(self) -> dict:
        return {"sample_id": self.sample_id, "video_dir": self.video_dir,
                "num_frames": self.num_frames, "object_id": self.object_id,
                "prompt_frame": self.prompt_frame,
                "prompt_kind": self.prompt_kind,
                "prompt_layer": self.prompt_layer, "qa": self.qa,
                "split": self.split}


@dataclass
class DatasetReport:
    videos: int = 0
    objects: int = 0
    qa_pairs: int = 0
    question_word_histogram: dict[int, int] = field(default_factory=dict)
    answer_word_histogram: dict[int, int] = field(default_factory=dict)
    frames_histogram: dict[int, int] = field(default_factory=dict)
    objects_per_video_histogram: dict[int, int] = field(default_factory=dict)

    @staticmethod
    def _mean(hist: dict[int, int]) -> float:
        total = sum(hist.values())
        if total == 0:
            return 0.0
        return sum(k * v for k, v in hist.items()) / total

    @property
    def mean_question_words(self) -> float:
        return self._mean(self.question_word_histogram)

    @property
    def mean_answer_words(self) -> float:
        return self._mean(self.answer_word_histogram)

    @property
    def mean_frames(self) -> float:
        return self._mean(self.frames_histogram)

    @property
    def mean_objects_per_video(self) -> float:
        return self._mean(self.objects_per_video_histogram)

    def to_json_obj(self) -> dict:
        def fmt(hist):
            return {str(k): v for k, v in sorted(hist.items())}
        return {"videos": self.videos, "objects": self.objects,
                "qa_pairs": self.qa_pairs,
                "mean_question_words": self.mean_question_words,
                "mean_answer_words": self.mean_answer_words,
                "mean_frames": self.mean_frames,
                "mean_objects_per_video": self.mean_objects_per_video,
                "question_word_histogram": fmt(self.question_word_histogram),
                "answer_word_histogram": fmt(self.answer_word_histogram),
                "frames_histogram": fmt(self.frames_histogram),
                "objects_per_video_histogram": fmt(self.objects_per_video_histogram)}


def ingest_annotations(root: str | Path, layout: str = "png-masks"
                       ) -> tuple[list[AnnotationGroup], list[str]]:
    """Discover (video, object) mask groups under ``root``.

    Masks stay on disk (lazy loading); per-item problems become diagnostics
    rather than aborting the scan. Raises EmptyDataset when nothing usable
    is found.
    """
    if layout != "png-masks":
        raise ContractViolation(f"unknown layout {layout!r}")
    root = Path(root)
    diagnostics: list[str] = []
    groups: list[AnnotationGroup] = []
    if not root.is_dir():
        raise EmptyDatasetError(f"dataset root not found: {root}")
    for video_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for obj_dir in sorted(p for p in video_dir.iterdir() if p.is_dir()):
            entries = []
            for png in sorted(obj_dir.glob("*.png")):
                if not png.stem.isdigit():
                    diagnostics.append(
                        f"{png}: non-numeric frame name, skipped")
                    continue
                entries.append((int(png.stem), png))
            entries.sort(key=lambda t: t[0])
            if not entries:
                diagnostics.append(f"{obj_dir}: no usable mask frames")
                continue
            groups.append(AnnotationGroup(
                video_id=video_dir.name, object_id=obj_dir.name,
                frame_numbers=[n for n, _ in entries],
                mask_paths=[p for _, p in entries]))
    if not groups:
        raise EmptyDatasetError(f"no (video, object) mask groups under {root}")
    return groups, diagnostics


def derive_seed(seed: int, *parts: str) -> int:
    """Stable per-item sub-seed (content-hash based, never id-order based)."""
    h = hashlib.sha256()
    h.update(str(seed).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(p.encode())
    return int.from_bytes(h.digest()[:8], "big")


def choose_prompt_plan(nonempty_frames: list[int], video_id: str,
                       object_id: str, seed: int
                       ) -> tuple[int, PromptKind, int]:
    """Seeded, uniform choice of (prompt frame, prompt kind, synthesis seed)
    for one (video, object)."""
    if not nonempty_frames:
        raise EmptyObjectError(f"{video_id}/{object_id}: mask empty in every frame")
    rng = np.random.default_rng(derive_seed(seed, video_id, object_id))
    prompt_frame = int(nonempty_frames[int(rng.integers(len(nonempty_frames)))])
    kind = random_prompt_kind(int(rng.integers(2 ** 63)))
    synth_seed = int(rng.integers(2 ** 63))
    return prompt_frame, kind, synth_seed


def build_instruct_record(group: AnnotationGroup, qa: list[dict], seed: int,
                          out_dir: str | Path, split: str = "train"
                          ) -> InstructRecord:
    """Choose a prompt frame and kind, synthesize the layer asset, and emit
    one record. Deterministic for a fixed seed."""
    if split not in SPLITS:
        raise ContractViolation(f"split must be one of {SPLITS}")
    if not qa:
        raise ContractViolation("build_instruct_record: qa list is empty")
    out_dir = Path(out_dir)

    masks: list[BinaryMask | None] = []
    nonempty: list[int] = []
    for i in range(group.num_frames):
        try:
            m = group.load_mask(i)
        except Exception:
            masks.append(None)
            continue
        masks.append(m)
        if not m.is_empty():
            nonempty.append(i)

    prompt_frame, kind, synth_seed = choose_prompt_plan(
        nonempty, group.video_id, group.object_id, seed)

    mask = masks[prompt_frame]
    assert mask is not None
    style = default_style(mask.width, mask.height)
    layer = synthesize_prompt(mask, kind, style, synth_seed,
                              anchor_frame=prompt_frame)
    sample_id = f"{group.video_id}__{group.object_id}"
    asset_rel = Path("prompts") / f"{sample_id}.png"
    write_layer(layer, out_dir / asset_rel)

    return InstructRecord(
        sample_id=sample_id,
        video_dir=group.video_id,
        num_frames=group.num_frames,
        object_id=group.object_id,
        prompt_frame=prompt_frame,
        prompt_kind=kind.value,
        prompt_layer=str(asset_rel),
        qa=list(qa),
        split=split)


def load_qa_sidecar(qa_root: str | Path, video_id: str, object_id: str
                    ) -> list[dict] | None:
    path = Path(qa_root) / video_id / object_id / "qa.json"
    if not path.is_file():
        return None
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("qa", [])
    out = []
    for item in data:
        if isinstance(item, dict) and "question" in item and "answer" in item:
            out.append({"question": str(item["question"]),
                        "answer": str(item["answer"])})
    return out


def assemble_dataset(root: str | Path, qa_root: str | Path, split: str,
                     seed: int, out_jsonl: str | Path
                     ) -> tuple[int, list[str]]:
    """Full pipeline: ingest, build every record, write sorted JSONL.

    Returns (records written, diagnostics). Objects without QA sidecars or
    with all-empty masks are skipped with a diagnostic.
    """
    groups, diagnostics = ingest_annotations(root)
    out_jsonl = Path(out_jsonl)
    out_dir = out_jsonl.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for g in groups:
        qa = load_qa_sidecar(qa_root, g.video_id, g.object_id)
        if not qa:
            diagnostics.append(
                f"{g.video_id}/{g.object_id}: no qa.json sidecar, skipped")
            continue
        try:
            records.append(build_instruct_record(g, qa, seed, out_dir, split))
        except EmptyObjectError as exc:
            diagnostics.append(str(exc))
    if not records:
        raise EmptyDatasetError("no records could be built")
    records.sort(key=lambda r: r.sample_id)
    with open(out_jsonl, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json_obj(), sort_keys=True,
                                ensure_ascii=False))
            fh.write("\n")
    return len(records), diagnostics


_REQUIRED_FIELDS = {"sample_id": str, "video_dir": str, "num_frames": int,
                    "object_id": str, "prompt_frame": int, "prompt_kind": str,
                    "prompt_layer": str, "qa": list, "split": str}

_KIND_NAMES = {k.value for k in ALL_KINDS}


def validate_dataset(jsonl_path: str | Path
                     ) -> tuple[DatasetReport, list[str]]:
    """Check every record invariant and file reference; collect violations
    (line-numbered) instead of raising. Also computes the report."""
    jsonl_path = Path(jsonl_path)
    base = jsonl_path.parent
    violations: list[str] = []
    records: list[dict] = []
    if not jsonl_path.is_file():
        return DatasetReport(), [f"{jsonl_path}: file not found"]
    with open(jsonl_path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    seen_ids: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            violations.append(f"line {lineno}: blank line")
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            violations.append(f"line {lineno}: invalid JSON ({exc.msg})")
            continue
        bad = False
        for name, typ in _REQUIRED_FIELDS.items():
            if name not in obj:
                violations.append(f"line {lineno}: missing field {name!r}")
                bad = True
            elif not isinstance(obj[name], typ) or isinstance(obj[name], bool):
                msg = f"line {lineno}: field {name!r} must be {typ.__name__}"
                if name == "prompt_frame":
                    msg += " (a record prompts exactly one frame)"
                violations.append(msg)
                bad = True
        if bad:
            continue
        if obj["sample_id"] in seen_ids:
            violations.append(
                f"line {lineno}: duplicate sample_id {obj['sample_id']!r} "
                "(one prompted frame per (video, object))")
        seen_ids.add(obj["sample_id"])
        if not (0 <= obj["prompt_frame"] < obj["num_frames"]):
            violations.append(
                f"line {lineno}: prompt_frame {obj['prompt_frame']} outside "
                f"[0, {obj['num_frames']})")
        if obj["prompt_kind"] not in _KIND_NAMES:
            violations.append(
                f"line {lineno}: unknown prompt_kind {obj['prompt_kind']!r}")
        if obj["split"] not in SPLITS:
            violations.append(f"line {lineno}: unknown split {obj['split']!r}")
        if not obj["qa"] or not all(
                isinstance(p, dict) and "question" in p and "answer" in p
                for p in obj["qa"]):
            violations.append(f"line {lineno}: qa must be a non-empty list of "
                              "question/answer objects")
        layer_path = base / obj["prompt_layer"]
        if not layer_path.is_file():
            violations.append(
                f"line {lineno}: prompt_layer {obj['prompt_layer']!r} not found")
        records.append(obj)
    if not lines:
        violations.append("empty dataset: file has no records")
    return _report_from_records(records), violations


def _report_from_records(records: list[dict]) -> DatasetReport:
    q_hist: Counter = Counter()
    a_hist: Counter = Counter()
    f_hist: Counter = Counter()
    videos: set[str] = set()
    objects: set[tuple[str, str]] = set()
    per_video_objects: Counter = Counter()
    qa_pairs = 0
    for obj in records:
        videos.add(obj["video_dir"])
        key = (obj["video_dir"], obj["object_id"])
        if key not in objects:
            objects.add(key)
            per_video_objects[obj["video_dir"]] += 1
        f_hist[int(obj["num_frames"])] += 1
        for pair in obj["qa"]:
            qa_pairs += 1
            q_hist[len(tokenize(str(pair.get("question", ""))))] += 1
            a_hist[len(tokenize(str(pair.get("answer", ""))))] += 1
    opv_hist: Counter = Counter(per_video_objects.values())
    return DatasetReport(
        videos=len(videos), objects=len(objects), qa_pairs=qa_pairs,
        question_word_histogram=dict(q_hist),
        answer_word_histogram=dict(a_hist),
        frames_histogram=dict(f_hist),
        objects_per_video_histogram=dict(opv_hist))


def summarize_stats(jsonl_path: str | Path) -> DatasetReport:
    """Report over the parseable records (validation issues ignored here)."""
    report, _ = validate_dataset(jsonl_path)
    return report


def sample_frames(total: int, n: int) -> list[int]:
    """``n`` uniformly spaced frame ordinals: floor((k + 0.5) * total / n).

    Computed in exact integer arithmetic; when total < n the formula yields
    repeats (every frame still covered).
    """
    if total < 1 or n < 1:
        raise ContractViolation("sample_frames: total and n must be >= 1")
    return [((2 * k + 1) * total) // (2 * n) for k in range(n)]
