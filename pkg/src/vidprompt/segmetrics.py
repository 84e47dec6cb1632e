"""Segmentation evaluation: region similarity J, contour accuracy F, their
average, and a robustness score for absent-target samples.

Conventions (needed for negative samples and documented in output metadata):

* J of two empty masks is 1.0.
* F of two empty boundaries is 1.0; exactly one empty boundary gives 0.0.
* The robustness score R here is this toolkit's operational definition:
  over samples whose target does not exist (all-empty ground truth),
  R = mean(1 - predicted foreground fraction). It rewards staying silent
  on absent targets and decays with hallucinated area.

Boundary matching uses exact integer squared distances (via the Euclidean
distance transform's nearest-feature indices), so results agree bit-for-bit
with a brute-force pairwise-distance oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ContractViolation, NoNegativesError
from .raster import BinaryMask, mask_boundary

R_DEFINITION = ("mean over absent-target samples of "
                "(1 - predicted foreground area fraction)")


@dataclass(frozen=True)
class SegEvalResult:
    j: float
    f: float
    jf: float
    per_sequence: dict[str, tuple[float, float]]

    @classmethod
    def from_per_sequence(cls, per_sequence: dict[str, tuple[float, float]]
                          ) -> "SegEvalResult":
        if not per_sequence:
            raise ContractViolation("SegEvalResult: no sequences")
        js = [v[0] for v in per_sequence.values()]
        fs = [v[1] for v in per_sequence.values()]
        j = float(np.mean(js))
        f = float(np.mean(fs))
        return cls(j=j, f=f, jf=(j + f) / 2.0, per_sequence=dict(per_sequence))


def default_tolerance(width: int, height: int) -> int:
    """Standard boundary tolerance: 0.8% of the image diagonal, >= 1 px."""
    return max(1, round(0.008 * float(np.hypot(width, height))))


def _check_dims(pred: BinaryMask, gt: BinaryMask, what: str):
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ContractViolation(f"{what}: mask dimensions differ")


def region_similarity_j(pred: BinaryMask, gt: BinaryMask) -> float:
    """Intersection over union; both-empty counts as a perfect 1.0."""
    _check_dims(pred, gt, "region_similarity_j")
    union = int((pred.bits | gt.bits).sum())
    if union == 0:
        return 1.0
    inter = int((pred.bits & gt.bits).sum())
    return inter / union


def _matched_within(src_boundary: np.ndarray, dst_boundary: np.ndarray,
                    tolerance: int) -> int:
    """Count src boundary pixels within ``tolerance`` of the dst boundary,
    using exact integer squared distances."""
    iy, ix = np.indices(src_boundary.shape)
    near = ndimage.distance_transform_edt(~dst_boundary, return_distances=False,
                                          return_indices=True)
    d2 = (iy - near[0]) ** 2 + (ix - near[1]) ** 2
    return int((d2[src_boundary] <= tolerance * tolerance).sum())


def contour_accuracy_f(pred: BinaryMask, gt: BinaryMask,
                       tolerance: int | None = None) -> float:
    """Boundary precision/recall F-measure with a pixel distance tolerance."""
    _check_dims(pred, gt, "contour_accuracy_f")
    if tolerance is None:
        tolerance = default_tolerance(pred.width, pred.height)
    pb = mask_boundary(pred.bits)
    gb = mask_boundary(gt.bits)
    np_, ng = int(pb.sum()), int(gb.sum())
    if np_ == 0 and ng == 0:
        return 1.0
    if np_ == 0 or ng == 0:
        return 0.0
    precision = _matched_within(pb, gb, tolerance) / np_
    recall = _matched_within(gb, pb, tolerance) / ng
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate_sequence(pred_masks: Sequence[BinaryMask],
                      gt_masks: Sequence[BinaryMask],
                      tolerance: int | None = None) -> tuple[float, float]:
    """Frame-wise J and F averaged over the sequence."""
    if len(pred_masks) != len(gt_masks):
        raise ContractViolation("evaluate_sequence: sequence lengths differ")
    if len(pred_masks) == 0:
        raise ContractViolation("evaluate_sequence: empty sequence")
    js = [region_similarity_j(p, g) for p, g in zip(pred_masks, gt_masks)]
    fs = [contour_accuracy_f(p, g, tolerance) for p, g in zip(pred_masks, gt_masks)]
    return float(np.mean(js)), float(np.mean(fs))


def evaluate_dataset(sequences: dict[str, tuple[Sequence[BinaryMask],
                                                Sequence[BinaryMask]]],
                     tolerance: int | None = None) -> SegEvalResult:
    """Per-sequence means aggregated over sequences in sorted-id order."""
    per_sequence: dict[str, tuple[float, float]] = {}
    for sid in sorted(sequences):
        pred, gt = sequences[sid]
        per_sequence[sid] = evaluate_sequence(pred, gt, tolerance)
    return SegEvalResult.from_per_sequence(per_sequence)


def robustness_r(samples: Sequence[tuple[Sequence[BinaryMask],
                                         Sequence[BinaryMask], bool]]) -> float:
    """Hallucination penalty over absent-target samples (see R_DEFINITION)."""
    penalties = []
    for pred_masks, gt_masks, target_exists in samples:
        if target_exists:
            continue
        for g in gt_masks:
            if not g.is_empty():
                raise ContractViolation(
                    "robustness_r: negative sample has non-empty ground truth")
        total = sum(m.width * m.height for m in pred_masks)
        fg = sum(m.area for m in pred_masks)
        frac = fg / total if total else 0.0
        penalties.append(1.0 - frac)
    if not penalties:
        raise NoNegativesError("robustness_r: no absent-target samples")
    return float(np.mean(penalties))
