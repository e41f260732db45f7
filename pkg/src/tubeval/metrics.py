"""Metric suite over matched tubelet pairs and raw detections.

IoU-family metrics (vIoU, tIoU, m_vIoU, vIoU@R) weigh each matched ground
truth tubelet equally across the whole dataset. The AP metrics follow the
action-tube convention: greedy confidence-ordered matching, dataset-wide
pooling, exact all-point interpolation of the precision-recall curve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .core import EvalInstance, PredictedTubelet, Tubelet, derived_extent, tube_confidence
from .geometry import iou

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredDetection:
    """One detection after greedy matching: confidence, claimed overlap, verdict."""

    confidence: float
    overlap: float
    is_tp: bool
    slot: int = 0
    instance_id: str = ""
    frame: Optional[int] = None


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) points in descending-confidence order."""

    points: Tuple[Tuple[float, float], ...]
    num_gt: int


def viou(gt: Tubelet, pred: PredictedTubelet) -> float:
    """Per-pair spatio-temporal overlap: sum of per-frame IoU over the temporal
    intersection, divided by the temporal union size."""
    gt_frames = gt.frames()
    extent = derived_extent(pred)
    inter = gt_frames & extent
    union = gt_frames | extent
    if not inter:
        return 0.0
    total = sum(iou(pred.frames[t][0], gt.boxes[t]) for t in sorted(inter))
    return total / len(union)


def tiou(gt: Tubelet, pred: PredictedTubelet) -> float:
    """Temporal-extent intersection over union for one matched pair."""
    gt_frames = gt.frames()
    extent = derived_extent(pred)
    union = gt_frames | extent
    if not union:
        return 0.0
    return len(gt_frames & extent) / len(union)


Pair = Tuple[Tubelet, PredictedTubelet]


def m_viou(pairs: Sequence[Pair]) -> float:
    """Flat mean of vIoU over every matched pair; 0 (with a warning) when empty."""
    if not pairs:
        log.warning("m_viou over zero matched pairs; defined as 0")
        return 0.0
    return sum(viou(gt, pred) for gt, pred in pairs) / len(pairs)


def viou_at_r(pairs: Sequence[Pair], r: float) -> float:
    """Fraction of matched pairs whose vIoU strictly exceeds r."""
    if not pairs:
        log.warning("viou_at_r over zero matched pairs; defined as 0")
        return 0.0
    return sum(1 for gt, pred in pairs if viou(gt, pred) > r) / len(pairs)


def ap_from_curve(curve: PrCurve) -> float:
    """Exact all-point interpolation: sum over recall steps of
    step width times the max precision at recall >= that step."""
    if not curve.points:
        return 0.0
    # Precision envelope from the high-recall end.
    points = list(curve.points)
    envelope: List[Tuple[float, float]] = []
    best = 0.0
    for recall, precision in reversed(points):
        best = max(best, precision)
        envelope.append((recall, best))
    envelope.reverse()
    ap = 0.0
    prev_recall = 0.0
    for recall, precision in envelope:
        if recall > prev_recall:
            ap += (recall - prev_recall) * precision
            prev_recall = recall
    return ap


def _greedy_frame(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    r: float,
) -> Tuple[List[ScoredDetection], int]:
    """Greedy per-(instance, frame) box matching. Returns detections + gt box count."""
    num_gt = sum(len(t.boxes) for t in instance.tubelets)
    frames = set()
    for pred in preds:
        frames.update(pred.frames)
    detections: List[ScoredDetection] = []
    for frame in sorted(frames):
        gt_boxes = [
            t.boxes[frame] for t in instance.tubelets if frame in t.boxes
        ]
        cands = []
        for pred in sorted(preds, key=lambda p: p.slot):
            entry = pred.frames.get(frame)
            if entry is None:
                continue
            box, probs = entry
            best = max((iou(box, g) for g in gt_boxes), default=0.0)
            cands.append((probs.p_referenced, best, pred.slot, box))
        cands.sort(key=lambda c: (-c[0], -c[1], c[2]))
        claimed = [False] * len(gt_boxes)
        for conf, _best, slot, box in cands:
            best_iou, best_idx = 0.0, -1
            for idx, g in enumerate(gt_boxes):
                if claimed[idx]:
                    continue
                value = iou(box, g)
                if value > best_iou:
                    best_iou, best_idx = value, idx
            if best_idx >= 0 and best_iou > r:
                claimed[best_idx] = True
                detections.append(ScoredDetection(conf, best_iou, True,
                                                 slot, instance.instance_id, frame))
            else:
                detections.append(ScoredDetection(conf, 0.0, False,
                                                  slot, instance.instance_id, frame))
    return detections, num_gt


def _greedy_video(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    r: float,
) -> Tuple[List[ScoredDetection], int]:
    """Greedy per-instance tube matching. Returns detections + gt tubelet count."""
    num_gt = len(instance.tubelets)
    cands = []
    for pred in sorted(preds, key=lambda p: p.slot):
        if not derived_extent(pred):
            continue
        conf = tube_confidence(pred)
        best = max((viou(t, pred) for t in instance.tubelets), default=0.0)
        cands.append((conf, best, pred.slot, pred))
    cands.sort(key=lambda c: (-c[0], -c[1], c[2]))
    claimed = [False] * num_gt
    detections: List[ScoredDetection] = []
    for conf, _best, slot, pred in cands:
        best_viou, best_idx = 0.0, -1
        for idx, t in enumerate(instance.tubelets):
            if claimed[idx]:
                continue
            value = viou(t, pred)
            if value > best_viou:
                best_viou, best_idx = value, idx
        if best_idx >= 0 and best_viou > r:
            claimed[best_idx] = True
            detections.append(ScoredDetection(conf, best_viou, True,
                                              slot, instance.instance_id))
        else:
            detections.append(ScoredDetection(conf, 0.0, False,
                                              slot, instance.instance_id))
    return detections, num_gt


def pool_pr_curve(detections: Sequence[ScoredDetection], num_gt: int) -> PrCurve:
    """Dataset-wide PR curve from per-instance detections (deterministic order)."""
    ordered = sorted(
        detections,
        key=lambda d: (-d.confidence, -d.overlap, d.slot, d.instance_id,
                       -1 if d.frame is None else d.frame),
    )
    points: List[Tuple[float, float]] = []
    tp = 0
    for k, det in enumerate(ordered, start=1):
        if det.is_tp:
            tp += 1
        recall = tp / num_gt if num_gt > 0 else 0.0
        points.append((recall, tp / k))
    return PrCurve(tuple(points), num_gt)


Predictions = Dict[str, Sequence[PredictedTubelet]]


def frame_ap(instances: Sequence[EvalInstance], predictions: Predictions, r: float) -> float:
    """Area under the dataset-wide PR curve for per-frame box detections at IoU > r."""
    detections: List[ScoredDetection] = []
    num_gt = 0
    for instance in sorted(instances, key=lambda x: x.instance_id):
        dets, n = _greedy_frame(instance, predictions.get(instance.instance_id, ()), r)
        detections.extend(dets)
        num_gt += n
    if num_gt == 0:
        return 0.0
    return ap_from_curve(pool_pr_curve(detections, num_gt))


def video_ap(instances: Sequence[EvalInstance], predictions: Predictions, r: float) -> float:
    """Area under the dataset-wide PR curve for whole-tube detections at vIoU > r."""
    detections: List[ScoredDetection] = []
    num_gt = 0
    for instance in sorted(instances, key=lambda x: x.instance_id):
        dets, n = _greedy_video(instance, predictions.get(instance.instance_id, ()), r)
        detections.extend(dets)
        num_gt += n
    if num_gt == 0:
        return 0.0
    return ap_from_curve(pool_pr_curve(detections, num_gt))
