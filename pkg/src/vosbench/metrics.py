"""Per-frame region similarity (J), boundary accuracy (F), and series stats.

All scores are computed in double precision with no intermediate rounding;
report formatting happens at serialization time only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatchError, EmptySeriesError

# Contour match tolerance as a fraction of the image diagonal.
BOUNDARY_TOLERANCE = 0.008


@dataclass
class FrameScoreSeries:
    """Per-frame scores for one object, ordered by frame index."""

    object_id: int
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.size == 0:
            raise EmptySeriesError(f"object {self.object_id}: empty score series")
        self.scores = scores


@dataclass
class MetricTriple:
    """Mean / recall / decay summary of a frame score series."""

    mean: float
    recall: float
    decay: float


def _check_dims(pred: np.ndarray, gt: np.ndarray):
    if pred.shape != gt.shape:
        raise DimensionMismatchError(
            f"prediction {pred.shape} vs ground truth {gt.shape}"
        )


def jaccard(pred: np.ndarray, gt: np.ndarray, ignore: np.ndarray | None = None) -> float:
    """Intersection over union of two boolean masks; 1.0 when both are empty.

    Pixels flagged in `ignore` count toward neither intersection nor union.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_dims(pred, gt)
    if ignore is not None and ignore.any():
        valid = ~ignore
        pred = pred & valid
        gt = gt & valid
    inter = np.count_nonzero(pred & gt)
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return inter / union


def mask_boundary(mask: np.ndarray) -> np.ndarray:
    """1-pixel boundary: foreground with a background 4-neighbor or image border."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = (
        padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    return mask & ~interior


def boundary_tolerance_radius(height: int, width: int, tolerance: float = BOUNDARY_TOLERANCE) -> int:
    """Dilation radius in pixels: ceil(tolerance * image diagonal)."""
    return math.ceil(tolerance * math.hypot(width, height))


def boundary_f(
    pred: np.ndarray,
    gt: np.ndarray,
    tolerance: float = BOUNDARY_TOLERANCE,
    ignore: np.ndarray | None = None,
) -> float:
    """Contour F-measure with a distance tolerance on boundary matching.

    Boundaries are matched within a Euclidean disk of radius
    ceil(tolerance * diagonal).  Returns 1.0 when both boundaries are empty,
    0.0 when exactly one is empty or precision + recall is zero.
    """
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    _check_dims(pred, gt)
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    pred_b = mask_boundary(pred)
    gt_b = mask_boundary(gt)
    if ignore is not None and ignore.any():
        pred_b = pred_b & ~ignore
        gt_b = gt_b & ~ignore
    n_pred = np.count_nonzero(pred_b)
    n_gt = np.count_nonzero(gt_b)
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    radius = boundary_tolerance_radius(pred.shape[0], pred.shape[1], tolerance)
    # Exact Euclidean distance from every pixel to the nearest boundary pixel;
    # a pixel is "within the dilated boundary" iff that distance <= radius.
    dist_to_gt = ndimage.distance_transform_edt(~gt_b)
    dist_to_pred = ndimage.distance_transform_edt(~pred_b)
    precision = np.count_nonzero(dist_to_gt[pred_b] <= radius) / n_pred
    recall = np.count_nonzero(dist_to_pred[gt_b] <= radius) / n_gt
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def jf(pred: np.ndarray, gt: np.ndarray, ignore: np.ndarray | None = None) -> float:
    """Arithmetic mean of region similarity and boundary accuracy."""
    return (jaccard(pred, gt, ignore) + boundary_f(pred, gt, ignore=ignore)) / 2.0


def quartile_bounds(n: int) -> tuple[int, int, int]:
    """Split indices for four contiguous near-equal partitions of length n.

    Boundary k (k = 1..3) sits at round(n * k / 4), rounding half away from
    zero so the partition is independent of the platform rounding mode.
    """
    return tuple(int(math.floor(n * k / 4 + 0.5)) for k in (1, 2, 3))


def summarize(series: FrameScoreSeries | np.ndarray, object_id: int = 0) -> MetricTriple:
    """Mean, recall at 0.5 (strict), and first-minus-last quartile decay."""
    if isinstance(series, FrameScoreSeries):
        scores = series.scores
    else:
        scores = np.asarray(series, dtype=np.float64)
        if scores.size == 0:
            raise EmptySeriesError(f"object {object_id}: empty score series")
    mean = float(np.mean(scores))
    recall = float(np.mean(scores > 0.5))
    n = scores.size
    if n < 4:
        decay = 0.0
    else:
        b1, _, b3 = quartile_bounds(n)
        decay = float(np.mean(scores[:b1]) - np.mean(scores[b3:]))
    return MetricTriple(mean=mean, recall=recall, decay=decay)
