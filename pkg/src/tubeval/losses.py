"""Reference implementations of the training objective terms.

These are pure numeric functions meant for validating a training framework's
loss code, not for autograd. The guided-attention term is out of scope: it
needs attention maps that only exist inside a network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .assignment import Assignment, _padded_preds
from .core import (
    ABSENT,
    REFERENCED,
    EvalConfig,
    EvalInstance,
    PredictedTubelet,
    StateProbs,
    Tubelet,
)
from .errors import InputError
from .geometry import giou, l1_distance

DEFAULT_LOG_EPSILON = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Term weights for composing a full training objective.

    l1/giou scale the box regression inside the Hungarian loss. classification
    and temporal are exposed for callers weighting the per-term totals.
    """

    l1: float = 5.0
    giou: float = 2.0
    classification: float = 3.0
    temporal: float = 3.0

    def __post_init__(self):
        for name in ("l1", "giou", "classification", "temporal"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InputError(f"loss weight {name} must be finite and non-negative")


def _nll(p: float, log_epsilon: float) -> float:
    return -math.log(max(p, log_epsilon))


def classification_loss(
    probs: StateProbs,
    gt_state: str,
    log_epsilon: float = DEFAULT_LOG_EPSILON,
) -> float:
    """Negative log-likelihood of the ground-truth three-way state."""
    return _nll(probs.get(gt_state), log_epsilon)


def temporal_loss(
    start_dist: Sequence[float],
    end_dist: Sequence[float],
    gt_start: int,
    gt_end: int,
    log_epsilon: float = DEFAULT_LOG_EPSILON,
) -> float:
    """Negative log-likelihood of the ground-truth start and end frames."""
    if gt_start > gt_end:
        raise InputError(f"gt_start {gt_start} > gt_end {gt_end}")
    for name, dist, index in (("start", start_dist, gt_start), ("end", end_dist, gt_end)):
        if not 0 <= index < len(dist):
            raise InputError(f"gt_{name} index {index} out of range for {len(dist)} frames")
        if abs(sum(dist) - 1.0) > 1e-6:
            raise InputError(f"{name} distribution does not sum to 1")
    return _nll(start_dist[gt_start], log_epsilon) + _nll(end_dist[gt_end], log_epsilon)


def _frame_terms(
    gt: Tubelet | None,
    pred: PredictedTubelet,
    weights: LossWeights,
    cfg: EvalConfig,
) -> float:
    """Class + box terms for one matched row, summed over the union of frames.

    Frames absent from the prediction map count as an implicit certain
    "absent" state; frames outside the gt extent target "absent". A gt frame
    the prediction skipped entirely contributes only the (clamped) class term,
    there being no box to regress against.
    """
    gt_frames = gt.frames() if gt is not None else frozenset()
    union = gt_frames | set(pred.frames)
    total = 0.0
    for t in sorted(union):
        gt_state = REFERENCED if t in gt_frames else ABSENT
        entry = pred.frames.get(t)
        if entry is None:
            p = 1.0 if gt_state == ABSENT else 0.0
            total += _nll(p, cfg.log_epsilon)
            continue
        box, probs = entry
        total += _nll(probs.get(gt_state), cfg.log_epsilon)
        if gt_state == REFERENCED:
            gt_box = gt.boxes[t]
            total += weights.l1 * l1_distance(box, gt_box)
            total += weights.giou * (1.0 - giou(box, gt_box))
    return total


def hungarian_loss(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    assignment: Assignment,
    weights: LossWeights,
    cfg: EvalConfig,
) -> float:
    """Set-prediction loss over matched pairs: class NLL plus weighted box loss.

    Rows beyond the gt count are padding and target "absent" at every
    predicted frame.
    """
    ordered = _padded_preds(instance, preds, cfg)
    n = max(len(ordered), len(instance.tubelets))
    if len(assignment.mapping) != n:
        raise InputError(
            f"assignment covers {len(assignment.mapping)} rows, expected {n}"
        )
    total = 0.0
    for i in range(n):
        gt = instance.tubelets[i] if i < len(instance.tubelets) else None
        pred = ordered[assignment.mapping[i]]
        total += _frame_terms(gt, pred, weights, cfg)
    return total
