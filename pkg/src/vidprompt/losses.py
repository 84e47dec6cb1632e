"""Forward numerics of the multi-task training objective, as verified
reference formulas (no optimizer, no backprop graph).

Total objective: weighted sum of token cross-entropy, per-pixel binary
cross-entropy on mask logits, and DICE loss, with default weights
(1.0, 2.0, 0.5). BCE and CE use log-sum-exp stabilized forms, never
probability clipping; the analytic gradients are provided only so tests
can verify the formulas against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ContractViolation, NoTargetsError
from .raster import BinaryMask

DICE_EPS = 1.0  # mask-level smoothing constant


@dataclass(frozen=True)
class LossWeights:
    lambda_txt: float = 1.0
    lambda_bce: float = 2.0
    lambda_dice: float = 0.5

    def __post_init__(self):
        if min(self.lambda_txt, self.lambda_bce, self.lambda_dice) < 0:
            raise ContractViolation("loss weights must be >= 0")


@dataclass(frozen=True)
class MaskLogits:
    """Pre-sigmoid real-valued grid over the mask raster."""

    values: np.ndarray  # (H, W) float

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise ContractViolation("MaskLogits.values must be an (H, W) array")
        if not np.isfinite(v).all():
            raise ContractViolation("MaskLogits.values must be finite")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _as_logits(logits) -> np.ndarray:
    if isinstance(logits, MaskLogits):
        return logits.values.astype(np.float64)
    return np.asarray(logits, dtype=np.float64)


def _as_target(target) -> np.ndarray:
    if isinstance(target, BinaryMask):
        return target.bits
    return np.asarray(target) != 0


def cross_entropy_tokens(logits: np.ndarray, targets: np.ndarray,
                         ignore_index: int = -100) -> float:
    """Mean negative log-softmax of the target ids over non-ignored positions."""
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.int64)
    if z.ndim != 2 or t.ndim != 1 or z.shape[0] != t.shape[0]:
        raise ContractViolation("cross_entropy_tokens: need (L, V) logits and "
                                "(L,) targets")
    keep = t != ignore_index
    if not keep.any():
        raise NoTargetsError("cross_entropy_tokens: every position is ignored")
    z = z[keep]
    t = t[keep]
    m = z.max(axis=1, keepdims=True)
    lse = (m[:, 0] + np.log(np.exp(z - m).sum(axis=1)))
    picked = z[np.arange(z.shape[0]), t]
    return float(np.mean(lse - picked))


def _check_mask_dims(z: np.ndarray, t: np.ndarray, what: str):
    if z.shape != t.shape:
        raise ContractViolation(f"{what}: logits/target dimensions differ")


def bce_mask(logits, target) -> float:
    """Mean stabilized binary cross-entropy over pixels."""
    z = _as_logits(logits)
    t = _as_target(target).astype(np.float64)
    _check_mask_dims(z, t, "bce_mask")
    # max(z, 0) - z*t + log(1 + exp(-|z|))
    val = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    return float(val.mean())


def bce_mask_grad(logits, target) -> np.ndarray:
    """d(bce_mask)/d(logits): (sigmoid(z) - t) / num_pixels."""
    z = _as_logits(logits)
    t = _as_target(target).astype(np.float64)
    _check_mask_dims(z, t, "bce_mask_grad")
    return (expit(z) - t) / z.size


def dice_loss(logits, target, eps: float = DICE_EPS) -> float:
    """1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps), p = sigmoid(z)."""
    z = _as_logits(logits)
    t = _as_target(target).astype(np.float64)
    _check_mask_dims(z, t, "dice_loss")
    p = expit(z)
    num = 2.0 * float((p * t).sum()) + eps
    den = float(p.sum()) + float(t.sum()) + eps
    return 1.0 - num / den


def dice_loss_grad(logits, target, eps: float = DICE_EPS) -> np.ndarray:
    """d(dice_loss)/d(logits), chain rule through p = sigmoid(z)."""
    z = _as_logits(logits)
    t = _as_target(target).astype(np.float64)
    _check_mask_dims(z, t, "dice_loss_grad")
    p = expit(z)
    a = 2.0 * float((p * t).sum()) + eps
    b = float(p.sum()) + float(t.sum()) + eps
    dl_dp = -(2.0 * t * b - a) / (b * b)
    return dl_dp * p * (1.0 - p)


def total_loss(l_txt: float, l_bce: float, l_dice: float,
               weights: LossWeights | None = None) -> float:
    """Exact weighted sum of the three components."""
    w = weights or LossWeights()
    for v in (l_txt, l_bce, l_dice):
        if not np.isfinite(v):
            raise ContractViolation("total_loss: components must be finite")
    return w.lambda_txt * l_txt + w.lambda_bce * l_bce + w.lambda_dice * l_dice
