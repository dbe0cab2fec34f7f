"""Dice coefficient and Jaccard index over integer label masks.

A class absent from both prediction and ground truth scores 1.0; absent from
exactly one of them it scores 0.0.
"""

from collections.abc import Sequence

import numpy as np

from ..core.exceptions import UsageError
from ..models import MetricsRecord


def _overlap(pred: np.ndarray, gt: np.ndarray, class_id: int) -> tuple[int, int, int]:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise UsageError(f"Prediction shape {pred.shape} does not match ground truth shape {gt.shape}")  # noqa: TRY003
    p = pred == class_id
    g = gt == class_id
    return int(np.count_nonzero(p & g)), int(np.count_nonzero(p)), int(np.count_nonzero(g))


def dice(pred: np.ndarray, gt: np.ndarray, class_id: int) -> float:
    """2|P & G| / (|P| + |G|) for one class."""
    intersection, n_pred, n_gt = _overlap(pred, gt, class_id)
    if n_pred + n_gt == 0:
        return 1.0
    return 2.0 * intersection / (n_pred + n_gt)


def jaccard(pred: np.ndarray, gt: np.ndarray, class_id: int) -> float:
    """|P & G| / |P | G| for one class."""
    intersection, n_pred, n_gt = _overlap(pred, gt, class_id)
    union = n_pred + n_gt - intersection
    if union == 0:
        return 1.0
    return intersection / union


def evaluate(pred_set: Sequence[np.ndarray], gt_set: Sequence[np.ndarray], num_classes: int) -> MetricsRecord:
    """Per-class Dice/Jaccard averaged over samples (macro average)."""
    if len(pred_set) == 0:
        raise UsageError("Cannot evaluate an empty prediction set")  # noqa: TRY003
    if len(pred_set) != len(gt_set):
        raise UsageError(f"Got {len(pred_set)} predictions for {len(gt_set)} ground-truth masks")  # noqa: TRY003

    dice_sums = dict.fromkeys(range(num_classes), 0.0)
    jaccard_sums = dict.fromkeys(range(num_classes), 0.0)
    pixel_counts = dict.fromkeys(range(num_classes), 0)

    for pred, gt in zip(pred_set, gt_set):
        for c in range(num_classes):
            intersection, n_pred, n_gt = _overlap(pred, gt, c)
            union = n_pred + n_gt - intersection
            dice_sums[c] += 1.0 if n_pred + n_gt == 0 else 2.0 * intersection / (n_pred + n_gt)
            jaccard_sums[c] += 1.0 if union == 0 else intersection / union
            pixel_counts[c] += n_gt

    n = len(pred_set)
    return MetricsRecord(
        num_classes=num_classes,
        dice={c: total / n for c, total in dice_sums.items()},
        jaccard={c: total / n for c, total in jaccard_sums.items()},
        pixel_counts=pixel_counts,
        num_samples=n,
    )
