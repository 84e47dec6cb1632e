"""Command-line entry point for every pipeline.

All structured output goes to stdout as JSON (sorted keys, so identical
argv + identical inputs produce byte-identical stdout once the manifest is
suppressed with --no-manifest; the manifest carries the wall-clock
duration). Diagnostics go to stderr as JSON.

Exit codes: 0 success, 1 contract or I/O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import assemble_dataset, summarize_stats, validate_dataset
from .errors import ContractViolation, VidPromptError
from .losses import LossWeights, bce_mask, cross_entropy_tokens, dice_loss, \
    total_loss
from .pngio import read_clip, read_layer, read_mask, read_mask_dir, \
    write_clip, write_layer, write_layers
from .propagate import PropagationConfig, PropagationMode, RedrawMode, \
    auto_seed_radius, overlay_video, propagate_prompt, redraw_layer, \
    style_from_layer
from .raster import BinaryMask, Frame, PromptLayer, alpha_blend, mask_centroid
from .segmetrics import R_DEFINITION, SegEvalResult, contour_accuracy_f, \
    evaluate_sequence, region_similarity_j, robustness_r
from .synth import PromptKind, PromptStyle, default_style, random_prompt_kind, \
    resolve_style, synthesize_prompt
from .textmetrics import bleu4, cider, metric_metadata, rouge_l
from .track import LucasKanadeTracker, TrackerConfig, seed_points

_KIND_CHOICES = [k.value for k in PromptKind] + ["random"]


def _sha256_path(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_file():
        h.update(path.read_bytes())
    elif path.is_dir():
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(str(p.relative_to(path)).encode())
                h.update(p.read_bytes())
    return h.hexdigest()


def _emit(result: dict, manifest: dict | None) -> None:
    out = dict(result)
    if manifest is not None:
        out["manifest"] = manifest
    sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")


def _parse_color(text: str) -> tuple[int, int, int]:
    text = text.lstrip("#")
    if len(text) != 6:
        raise ContractViolation("--color expects RRGGBB hex")
    try:
        return tuple(int(text[i:i + 2], 16) for i in (0, 2, 4))  # type: ignore
    except ValueError as exc:
        raise ContractViolation(f"--color: {exc}") from exc


def _style_from_args(args, width: int, height: int) -> PromptStyle:
    return resolve_style(
        width, height,
        color=_parse_color(args.color) if args.color else None,
        fill_alpha=args.fill_alpha, stroke_alpha=args.stroke_alpha,
        stroke_width=args.stroke_width)


def _load_config_file(path: str) -> dict:
    p = Path(path)
    text = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib  # py >= 3.11
    except ImportError:
        import tomli as tomllib  # type: ignore
    return tomllib.loads(text.decode())


def _apply_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Config file supplies defaults; explicit flags win."""
    if not getattr(args, "config", None):
        return
    cfg = _load_config_file(args.config)
    if not isinstance(cfg, dict):
        raise ContractViolation("--config: expected a table/object at top level")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and getattr(args, dest) == parser_defaults.get(dest):
            setattr(args, dest, value)


# --- subcommand implementations ----------------------------------------------

def _cmd_synth(args) -> dict:
    mask = read_mask(args.mask)
    if args.kind == "random":
        kind = random_prompt_kind(args.seed)
    else:
        kind = PromptKind(args.kind)
    style = _style_from_args(args, mask.width, mask.height)
    layer = synthesize_prompt(mask, kind, style, args.seed)
    write_layer(layer, args.out)
    return {"kind": kind.value, "out": str(args.out),
            "marked_pixels": int(layer.mark.sum()),
            "width": mask.width, "height": mask.height}


def _tracker_config(args) -> TrackerConfig:
    return TrackerConfig(
        pyramid_levels=args.pyramid_levels, window=args.window,
        max_iterations=args.max_iterations,
        convergence_eps=args.convergence_eps,
        residual_threshold=args.residual_threshold,
        max_points=args.max_points, seed_radius=args.seed_radius)


def _cmd_propagate(args) -> dict:
    clip = read_clip(args.frames)
    layer = read_layer(args.prompt, anchor_frame=args.anchor)
    cfg = PropagationConfig(mode=PropagationMode(args.mode),
                            redraw=RedrawMode(args.redraw),
                            min_visible_fraction=args.min_visible_fraction,
                            tracker=_tracker_config(args))
    oracle_masks = None
    if args.mode == "oracle":
        if not args.oracle_masks:
            raise ContractViolation("--mode oracle requires --oracle-masks")
        oracle_masks = read_mask_dir(args.oracle_masks)
    prompt = propagate_prompt(clip, layer, args.anchor, cfg,
                              oracle_masks=oracle_masks, seed=args.seed)
    write_layers(prompt.layers, args.out_layers)

    jobs = max(1, args.jobs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blended = list(pool.map(alpha_blend, clip, prompt.layers))
    else:
        blended = overlay_video(clip, prompt)
    write_clip(blended, args.out_overlay)

    frames_info = []
    for i in range(prompt.num_frames):
        c = prompt.circles[i]
        frames_info.append({
            "idx": i,
            "visible_fraction": prompt.visible_fractions[i],
            "circle": {"x": c.x, "y": c.y, "r": c.r} if c else None})
    sidecar = {"anchor": prompt.anchor_frame, "mode": args.mode,
               "source_kind": prompt.source_kind, "frames": frames_info}
    sidecar_path = Path(args.out_layers) / "propagation.json"
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n",
                            encoding="utf-8")
    return {"frames": prompt.num_frames, "anchor": prompt.anchor_frame,
            "mode": args.mode, "out_layers": str(args.out_layers),
            "out_overlay": str(args.out_overlay),
            "sidecar": str(sidecar_path),
            "visible_fractions": prompt.visible_fractions}


def _cmd_overlay(args) -> dict:
    clip = read_clip(args.frames)
    layers = [read_layer(p, anchor_frame=0) for p in
              sorted(Path(args.layers).glob("*.png"), key=lambda p: p.name)
              if p.stem.isdigit()]
    if len(layers) != len(clip):
        raise ContractViolation(
            f"overlay: {len(clip)} frames but {len(layers)} layers")
    blended = [alpha_blend(f, l) for f, l in zip(clip, layers)]
    write_clip(blended, args.out)
    return {"frames": len(blended), "out": str(args.out)}


def _read_mask_tree(root: Path) -> dict[str, list]:
    if not root.is_dir():
        raise ContractViolation(f"mask tree not found: {root}")
    tree = {}
    for seq_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        masks = []
        for png in sorted(seq_dir.glob("*.png"), key=lambda p: p.name):
            masks.append(read_mask(png))
        if masks:
            tree[seq_dir.name] = masks
    if not tree:
        raise ContractViolation(f"no sequences under {root}")
    return tree


def _cmd_eval_seg(args) -> dict:
    pred_tree = _read_mask_tree(Path(args.pred))
    gt_tree = _read_mask_tree(Path(args.gt))
    missing = sorted(set(gt_tree) - set(pred_tree))
    if missing:
        raise ContractViolation(f"predictions missing for sequences: {missing}")
    jobs = max(1, args.jobs)
    ids = sorted(gt_tree)

    def one(sid: str) -> tuple[str, tuple[float, float]]:
        return sid, evaluate_sequence(pred_tree[sid], gt_tree[sid],
                                      args.tolerance)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, ids))
    else:
        pairs = [one(sid) for sid in ids]
    result = SegEvalResult.from_per_sequence(dict(pairs))

    out = {"J": result.j, "F": result.f, "JF": result.jf,
           "per_sequence": {sid: {"J": v[0], "F": v[1]}
                            for sid, v in sorted(result.per_sequence.items())}}
    negatives = [(pred_tree[sid], gt_tree[sid], False) for sid in ids
                 if all(m.is_empty() for m in gt_tree[sid])]
    if negatives:
        out["R"] = robustness_r(negatives)
        out["R_definition"] = R_DEFINITION
    return out


def _read_jsonl_map(path: Path, value_fields: tuple[str, ...]) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ContractViolation(
                    f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            key = obj.get("sample_id", obj.get("id"))
            if key is None:
                raise ContractViolation(f"{path}:{lineno}: missing sample_id")
            for f in value_fields:
                if f in obj:
                    out[str(key)] = obj[f]
                    break
            else:
                raise ContractViolation(
                    f"{path}:{lineno}: expected one of {value_fields}")
    return out


def _cmd_eval_text(args) -> dict:
    preds = _read_jsonl_map(Path(args.pred), ("answer", "text", "prediction"))
    refs = _read_jsonl_map(Path(args.ref), ("answers", "answer", "text",
                                            "references"))
    shared = sorted(set(preds) & set(refs))
    if not shared:
        raise ContractViolation("eval-text: no shared sample ids")
    corpus = []
    for sid in shared:
        r = refs[sid]
        r_list = r if isinstance(r, list) else [r]
        corpus.append((preds[sid], r_list))
    bleu_scores = [bleu4(c, r) for c, r in corpus]
    rouge_scores = [rouge_l(c, r) for c, r in corpus]
    return {"bleu4": float(np.mean(bleu_scores)),
            "rougeL": float(np.mean(rouge_scores)),
            "cider": cider(corpus),
            "n": len(corpus),
            "metadata": metric_metadata()}


def _cmd_make_dataset(args) -> dict:
    n, diagnostics = assemble_dataset(args.root, args.qa or args.root,
                                      args.split, args.seed, args.out)
    return {"records": n, "out": str(args.out), "split": args.split,
            "diagnostics": diagnostics}


def _cmd_validate(args) -> dict:
    report, violations = validate_dataset(args.infile)
    return {"report": report.to_json_obj(), "violations": violations,
            "valid": not violations}


def _cmd_stats(args) -> dict:
    report = summarize_stats(args.infile)
    return {"report": report.to_json_obj()}


def _cmd_selftest(args) -> dict:
    cases = []

    def check(name: str, got, want, tol: float = 0.0):
        ok = (abs(got - want) <= tol) if tol else (got == want)
        cases.append({"name": name, "ok": bool(ok),
                      "got": got if np.isscalar(got) else str(got),
                      "want": want if np.isscalar(want) else str(want)})

    frame = Frame(np.full((1, 1, 3), 100, dtype=np.uint8))
    layer = PromptLayer(np.array([[[200, 0, 0, 128]]], dtype=np.uint8))
    blended = alpha_blend(frame, layer)
    check("blend half-alpha", [int(v) for v in blended.pixels[0, 0]] == [150, 50, 50],
          True)

    left = np.zeros((4, 4), dtype=bool)
    left[:, :2] = True
    top = np.zeros((4, 4), dtype=bool)
    top[:2, :] = True
    check("J half overlap", region_similarity_j(BinaryMask(left), BinaryMask(top)),
          1.0 / 3.0, tol=1e-15)
    sq = np.zeros((8, 8), dtype=bool)
    sq[2:6, 2:6] = True
    check("F identical", contour_accuracy_f(BinaryMask(sq), BinaryMask(sq), 2), 1.0)

    check("BLEU cat-sat",
          bleu4("the cat sat on the mat", ["the cat sat on a mat"]),
          ((5 / 6) * (3 / 5) * (2 / 4) * (1 / 3)) ** 0.25, tol=1e-9)
    check("ROUGE-L 2/3", rouge_l("the cat sat", ["the dog sat"]), 2.0 / 3.0,
          tol=1e-12)

    v = 7
    logits = np.zeros((3, v))
    check("CE uniform = ln V",
          cross_entropy_tokens(logits, np.array([1, 2, 3])), math.log(v),
          tol=1e-12)
    z = np.zeros((2, 2))
    check("BCE at z=0 = ln 2", bce_mask(z, np.zeros((2, 2), dtype=bool)),
          math.log(2.0), tol=1e-12)
    half = np.zeros((4, 4), dtype=bool)
    half[:2, :] = True
    check("DICE at p=0.5, half fg", dice_loss(np.zeros((4, 4)), half, eps=0.0),
          0.5, tol=1e-12)
    check("total loss weights", total_loss(1.0, 0.5, 0.2, LossWeights()), 2.1,
          tol=1e-15)

    failed = [c["name"] for c in cases if not c["ok"]]
    return {"passed": len(cases) - len(failed), "failed": len(failed),
            "failures": failed, "cases": cases}


def _cmd_bench(args) -> dict:
    clip = read_clip(args.frames)
    t = len(clip)
    h, w = clip[0].height, clip[0].width
    if args.prompt:
        layer = read_layer(args.prompt, anchor_frame=args.anchor)
    else:
        mask = np.zeros((h, w), dtype=bool)
        ch, cw = h // 2, w // 2
        mask[ch - h // 8:ch + h // 8, cw - w // 8:cw + w // 8] = True
        layer = synthesize_prompt(BinaryMask(mask), PromptKind.POINT,
                                  default_style(w, h), seed=args.seed)
    cfg = PropagationConfig(tracker=_tracker_config(args))
    anchor = args.anchor

    stages = {}
    t0 = time.perf_counter()
    center = mask_centroid(BinaryMask(layer.mark))
    pts = seed_points(center, cfg.tracker.seed_radius or auto_seed_radius(layer),
                      cfg.tracker.max_points)
    stages["seed"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tracker = LucasKanadeTracker(cfg.tracker)
    tracked = tracker.track(clip, pts, anchor)
    stages["track"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    style = style_from_layer(layer)
    seeds = tracked.positions[anchor]
    layers = []
    for i in range(t):
        if i == anchor:
            layers.append(layer)
        else:
            layers.append(redraw_layer(tracked.positions[i], tracked.visible[i],
                                       cfg, (h, w), style, authored=layer,
                                       seed_positions=seeds))
    stages["redraw"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    blended = [alpha_blend(f, l) for f, l in zip(clip, layers)]
    stages["blend"] = time.perf_counter() - t0

    total = sum(stages.values())
    return {"frames": t, "width": w, "height": h,
            "points": len(pts),
            "stages": {k: {"seconds": v, "fps": (t / v if v > 0 else None)}
                       for k, v in stages.items()},
            "total_seconds": total,
            "overall_fps": t / total if total > 0 else None,
            "blended_frames": len(blended)}


# --- parser -------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="single source of randomness (default 0)")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker parallelism; output independent of N")
    common.add_argument("--config", type=str, default=None,
                        help="toml or json file of defaults; flags override")
    common.add_argument("--no-manifest", action="store_true",
                        help="suppress the run manifest (for golden output)")

    tracker = argparse.ArgumentParser(add_help=False)
    tracker.add_argument("--pyramid-levels", type=int, default=3)
    tracker.add_argument("--window", type=int, default=15)
    tracker.add_argument("--max-iterations", type=int, default=30)
    tracker.add_argument("--convergence-eps", type=float, default=0.03)
    tracker.add_argument("--residual-threshold", type=float, default=20.0)
    tracker.add_argument("--max-points", type=int, default=64)
    tracker.add_argument("--seed-radius", type=float, default=None,
                         help="fixed seeding radius; default auto-scales")

    parser = argparse.ArgumentParser(
        prog="vidprompt",
        description="visual prompt synthesis, propagation, and evaluation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="render one prompt kind from a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--kind", choices=_KIND_CHOICES, default="random")
    p.add_argument("--color", default=None, help="RRGGBB hex")
    p.add_argument("--fill-alpha", type=int, default=None)
    p.add_argument("--stroke-alpha", type=int, default=None)
    p.add_argument("--stroke-width", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("propagate", parents=[common, tracker],
                       help="spread one authored prompt across a clip")
    p.add_argument("--frames", required=True)
    p.add_argument("--prompt", required=True, help="authored RGBA layer (png)")
    p.add_argument("--anchor", type=int, required=True)
    p.add_argument("--mode", choices=[m.value for m in PropagationMode],
                   default="stom")
    p.add_argument("--redraw", choices=[m.value for m in RedrawMode],
                   default="circle")
    p.add_argument("--min-visible-fraction", type=float, default=0.25)
    p.add_argument("--oracle-masks", default=None)
    p.add_argument("--out-layers", required=True)
    p.add_argument("--out-overlay", required=True)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("overlay", parents=[common],
                       help="alpha-blend existing per-frame layers")
    p.add_argument("--frames", required=True)
    p.add_argument("--layers", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("eval-seg", parents=[common],
                       help="J/F/J&F over <seq>/<frame>.png mask trees")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tolerance", type=int, default=None)
    p.set_defaults(func=_cmd_eval_seg)

    p = sub.add_parser("eval-text", parents=[common],
                       help="BLEU-4 / ROUGE-L / CIDEr over JSONL answers")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_eval_text)

    p = sub.add_parser("make-dataset", parents=[common],
                       help="assemble instruction records from mask + qa trees")
    p.add_argument("--root", required=True)
    p.add_argument("--qa", default=None, help="qa sidecar root (default: root)")
    p.add_argument("--split", choices=["train", "test"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_dataset)

    p = sub.add_parser("validate", parents=[common],
                       help="check record invariants and file references")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stats", parents=[common],
                       help="dataset statistics report")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("selftest", parents=[common],
                       help="run the embedded golden vectors")
    p.set_defaults(func=_cmd_selftest)

    p = sub.add_parser("bench", parents=[common, tracker],
                       help="per-stage throughput on a frame directory")
    p.add_argument("--frames", required=True)
    p.add_argument("--prompt", default=None)
    p.add_argument("--anchor", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    return parser


_INPUT_ARGS = ("mask", "frames", "prompt", "layers", "pred", "gt", "root",
               "qa", "infile", "oracle_masks")


def _manifest(args: argparse.Namespace, started: float) -> dict:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "no_manifest") and
              not callable(v)}
    inputs = {}
    for name in _INPUT_ARGS:
        value = getattr(args, name, None)
        if value:
            path = Path(str(value))
            if path.exists():
                inputs[name] = _sha256_path(path)
    return {"tool": "vidprompt", "version": __version__,
            "subcommand": args.subcommand,
            "config": {k: (v.value if hasattr(v, "value") else v)
                       for k, v in config.items()},
            "inputs": inputs,
            "duration_s": time.monotonic() - started}


def _defaults_for(parser: argparse.ArgumentParser, subcommand: str) -> dict:
    out = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            sub = action.choices.get(subcommand)
            if sub is not None:
                out.update({a.dest: a.default for a in sub._actions})
        else:
            out[action.dest] = action.default
    return out


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.monotonic()
    try:
        _apply_config(args, _defaults_for(parser, args.subcommand))
        result = args.func(args)
    except VidPromptError as exc:
        sys.stderr.write(json.dumps({"error": exc.as_dict()}) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(json.dumps(
            {"error": {"code": "io-error", "message": str(exc)}}) + "\n")
        return 1
    manifest = None if args.no_manifest else _manifest(args, started)
    _emit(result, manifest)
    if args.subcommand == "selftest" and result.get("failed"):
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
