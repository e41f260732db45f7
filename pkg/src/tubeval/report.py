"""Batch evaluation: per-instance matching, bucketed aggregation, rendering."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .assignment import hungarian, match_tubelets, min_injection_cost, tubelet_cost_matrix
from .assignment import _padded_preds
from .core import EvalConfig, EvalInstance, PredictedTubelet
from .dataset_io import (
    ENTITY_LABELS,
    LENGTH_LABELS,
    OBJECT_COUNT_LABELS,
    Bucket,
    bucketize,
    parse_ground_truth,
    parse_predictions,
)
from .errors import TubevalError
from .metrics import (
    ScoredDetection,
    _greedy_frame,
    _greedy_video,
    ap_from_curve,
    pool_pr_curve,
    tiou,
    viou,
)

BUCKET_DIMENSIONS = ("object-count", "length", "entities")
_DIMENSION_LABELS = {
    "object-count": OBJECT_COUNT_LABELS,
    "length": LENGTH_LABELS,
    "entities": ENTITY_LABELS,
}

# Pinned evaluation protocol, echoed in every report so results are auditable.
PROTOCOL = {
    "matching": "tubelet-wise hungarian, box-only cost, lexicographic tie-break",
    "ap": "greedy confidence-ordered matching, dataset-wide pooling, "
          "all-point interpolation",
    "viou_at_r_inequality": "strict",
    "length_buckets": "short 1-5, normal 6-9, long 10+",
}


class OracleMismatch(TubevalError):
    """Hungarian and brute-force assignment costs disagreed (--check-oracle)."""


class _InstanceResult:
    """Everything one instance contributes to the dataset-level reduction."""

    def __init__(self, instance: EvalInstance, preds: Sequence[PredictedTubelet],
                 cfg: EvalConfig, check_oracle: bool):
        self.instance_id = instance.instance_id
        self.bucket: Bucket = bucketize(instance)
        pairs = match_tubelets(instance, preds, cfg)
        self.pairs = [
            {
                "tubelet_id": gt.tubelet_id,
                "slot": pred.slot,
                "viou": viou(gt, pred),
                "tiou": tiou(gt, pred),
            }
            for gt, pred in pairs
        ]
        self.frame_dets: Dict[float, Tuple[List[ScoredDetection], int]] = {}
        self.video_dets: Dict[float, Tuple[List[ScoredDetection], int]] = {}
        self.frame_dets[cfg.frame_ap_threshold] = _greedy_frame(
            instance, preds, cfg.frame_ap_threshold)
        self.video_dets[cfg.video_ap_threshold] = _greedy_video(
            instance, preds, cfg.video_ap_threshold)
        self.oracle_gap: Optional[float] = None
        if check_oracle and instance.tubelets and len(instance.tubelets) <= 7:
            ordered = _padded_preds(instance, preds, cfg)
            costs = tubelet_cost_matrix(instance, ordered, cfg)
            self.oracle_gap = hungarian(costs).total_cost - min_injection_cost(costs)


def _subset_metrics(results: Sequence[_InstanceResult], cfg: EvalConfig) -> dict:
    pair_vious: List[float] = []
    pair_tious: List[float] = []
    frame_pool: List[ScoredDetection] = []
    frame_gt = 0
    video_pool: List[ScoredDetection] = []
    video_gt = 0
    for res in results:
        pair_vious.extend(p["viou"] for p in res.pairs)
        pair_tious.extend(p["tiou"] for p in res.pairs)
        dets, n = res.frame_dets[cfg.frame_ap_threshold]
        frame_pool.extend(dets)
        frame_gt += n
        dets, n = res.video_dets[cfg.video_ap_threshold]
        video_pool.extend(dets)
        video_gt += n
    num_pairs = len(pair_vious)
    frame_ap_value = (
        ap_from_curve(pool_pr_curve(frame_pool, frame_gt)) if frame_gt else 0.0)
    video_ap_value = (
        ap_from_curve(pool_pr_curve(video_pool, video_gt)) if video_gt else 0.0)
    return {
        "num_instances": len(results),
        "num_gt_tubelets": num_pairs,
        "m_viou": sum(pair_vious) / num_pairs if num_pairs else 0.0,
        "tiou": sum(pair_tious) / num_pairs if num_pairs else 0.0,
        "viou_at": {
            repr(r): (sum(1 for v in pair_vious if v > r) / num_pairs
                      if num_pairs else 0.0)
            for r in cfg.viou_thresholds
        },
        "frame_ap": {repr(cfg.frame_ap_threshold): frame_ap_value},
        "video_ap": {repr(cfg.video_ap_threshold): video_ap_value},
    }


def _bucket_label(bucket: Bucket, dimension: str) -> str:
    if dimension == "object-count":
        return bucket.object_count
    if dimension == "length":
        return bucket.length
    return bucket.entities


def evaluate_parsed(
    instances: Sequence[EvalInstance],
    predictions: Dict[str, Sequence[PredictedTubelet]],
    cfg: EvalConfig,
    buckets: Sequence[str] = BUCKET_DIMENSIONS,
    jobs: int = 1,
    check_oracle: bool = False,
) -> dict:
    """Compute the full bucketed report from parsed structures."""
    for dim in buckets:
        if dim not in BUCKET_DIMENSIONS:
            raise TubevalError(f"unknown bucket dimension {dim!r}")
    ordered = sorted(instances, key=lambda inst: inst.instance_id)

    def work(instance: EvalInstance) -> _InstanceResult:
        return _InstanceResult(
            instance, predictions.get(instance.instance_id, ()), cfg, check_oracle)

    if jobs > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, ordered))
    else:
        results = [work(inst) for inst in ordered]

    if check_oracle:
        for res in results:
            if res.oracle_gap is not None and res.oracle_gap != 0.0:
                raise OracleMismatch(
                    f"instance {res.instance_id}: hungarian/brute-force gap "
                    f"{res.oracle_gap!r}")

    report = {
        "tool": {"name": "tubeval", "version": __version__},
        "config": {**cfg.to_dict(), "buckets": list(buckets), "protocol": PROTOCOL},
        "overall": _subset_metrics(results, cfg),
        "buckets": {},
        "instances": {
            res.instance_id: {
                "bucket": vars(res.bucket),
                "pairs": res.pairs,
            }
            for res in results
        },
    }
    for dim in buckets:
        groups: Dict[str, List[_InstanceResult]] = {}
        for res in results:
            groups.setdefault(_bucket_label(res.bucket, dim), []).append(res)
        report["buckets"][dim] = {
            label: _subset_metrics(groups[label], cfg)
            for label in _DIMENSION_LABELS[dim]
            if label in groups
        }
    return report


def evaluate(
    gt_document,
    pred_document,
    cfg: EvalConfig = EvalConfig(),
    buckets: Sequence[str] = BUCKET_DIMENSIONS,
    jobs: int = 1,
    check_oracle: bool = False,
) -> dict:
    """Parse both documents and compute the report. Raises ParseError /
    ValidationError / OracleMismatch on failure."""
    gt = parse_ground_truth(gt_document)
    predictions = parse_predictions(pred_document, gt, cfg)
    return evaluate_parsed(gt[0], predictions, cfg, buckets, jobs, check_oracle)


_TABLE_METRICS = ("m_viou", "tiou", "viou_at", "frame_ap", "video_ap")


def _metric_columns(subset: dict) -> List[Tuple[str, float]]:
    cols: List[Tuple[str, float]] = [
        ("m_vIoU", subset["m_viou"]),
        ("tIoU", subset["tiou"]),
    ]
    for r, value in subset["viou_at"].items():
        cols.append((f"vIoU@{r}", value))
    for r, value in subset["frame_ap"].items():
        cols.append((f"frame-AP@{r}", value))
    for r, value in subset["video_ap"].items():
        cols.append((f"video-AP@{r}", value))
    return cols


def render_report(report: dict, format: str = "json") -> str:
    """json: canonical machine format. table: 2-decimal bucket-by-metric grid."""
    if format == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    if format != "table":
        raise TubevalError(f"unknown format {format!r}")

    rows: List[Tuple[str, dict]] = [("overall", report["overall"])]
    for dim, labels in report["buckets"].items():
        for label, subset in labels.items():
            rows.append((f"{dim}/{label}", subset))
    header = ["bucket"] + [name for name, _ in _metric_columns(report["overall"])]
    table = [header]
    for name, subset in rows:
        table.append([name] + [f"{value:.2f}" for _, value in _metric_columns(subset)])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in table
    ]
    return "\n".join(lines) + "\n"
