"""Box-level kernels: IoU, generalized IoU, L1 distance, combined box loss.

All math is plain double precision; degenerate (zero-area) boxes are legal
inputs and score IoU 0 against everything.
"""

from __future__ import annotations

from .core import Box, EvalConfig


def _inter_union(a: Box, b: Box):
    # Areas come from the same corner values as the intersection so that
    # identical boxes yield inter == union exactly.
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = iw * ih if iw > 0.0 and ih > 0.0 else 0.0
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    return inter, area_a + area_b - inter


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 when the union has zero area."""
    inter, union = _inter_union(a, b)
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: Box, b: Box) -> float:
    """Generalized IoU: IoU minus the normalized empty area of the hull.

    Ranges over [-1, 1]; equals IoU when the hull is exactly the union.
    Returns 0 when the enclosing hull itself has zero area.
    """
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    hull = (max(ax1, bx1) - min(ax0, bx0)) * (max(ay1, by1) - min(ay0, by0))
    if hull <= 0.0:
        return 0.0
    inter, union = _inter_union(a, b)
    base = inter / union if union > 0.0 else 0.0
    # hull >= union mathematically; clamp guards 1-ulp rounding excursions
    excess = max(hull - union, 0.0)
    return base - excess / hull


def l1_distance(a: Box, b: Box) -> float:
    """Sum of absolute coordinate differences in (cx, cy, w, h) form."""
    return (abs(a.cx - b.cx) + abs(a.cy - b.cy)
            + abs(a.w - b.w) + abs(a.h - b.h))


def box_loss(pred: Box, gt: Box, cfg: EvalConfig) -> float:
    """Weighted L1 + (1 - gIoU) regression cost between a prediction and its target."""
    return cfg.l1_weight * l1_distance(pred, gt) + cfg.giou_weight * (1.0 - giou(pred, gt))
