"""Core domain types: boxes, tubelets, prediction slots, instances, config."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

from .errors import InputError

# Slack allowed when a box edge pokes past the image border (annotation noise).
COORD_SLACK = 1e-6

# Tolerance on the three-state probability sum.
PROB_SUM_TOL = 1e-6

REFERENCED = "referenced"
PRESENT_UNREFERENCED = "present_unreferenced"
ABSENT = "absent"
STATES = (REFERENCED, PRESENT_UNREFERENCED, ABSENT)


def _check_unit(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InputError(f"{name} must be finite, got {value!r}")
    if value < 0.0 or value > 1.0:
        raise InputError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class Box:
    """Normalized center-form bounding box: (cx, cy, w, h), all in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            _check_unit(name, getattr(self, name))
        if self.cx - self.w / 2 < -COORD_SLACK or self.cx + self.w / 2 > 1 + COORD_SLACK:
            raise InputError(f"box extends past x borders: cx={self.cx} w={self.w}")
        if self.cy - self.h / 2 < -COORD_SLACK or self.cy + self.h / 2 > 1 + COORD_SLACK:
            raise InputError(f"box extends past y borders: cy={self.cy} h={self.h}")

    def corners(self) -> Tuple[float, float, float, float]:
        """(x0, y0, x1, y1) corner form, used internally for area math."""
        return (
            self.cx - self.w / 2,
            self.cy - self.h / 2,
            self.cx + self.w / 2,
            self.cy + self.h / 2,
        )


@dataclass(frozen=True)
class StateProbs:
    """Per-frame three-state distribution for one prediction slot."""

    p_referenced: float
    p_present_unreferenced: float
    p_absent: float

    def __post_init__(self):
        for name in ("p_referenced", "p_present_unreferenced", "p_absent"):
            _check_unit(name, getattr(self, name))
        total = self.p_referenced + self.p_present_unreferenced + self.p_absent
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise InputError(f"state probabilities sum to {total}, expected 1.0")

    def get(self, state: str) -> float:
        if state == REFERENCED:
            return self.p_referenced
        if state == PRESENT_UNREFERENCED:
            return self.p_present_unreferenced
        if state == ABSENT:
            return self.p_absent
        raise InputError(f"unknown state {state!r}")


def _check_frame_index(value) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise InputError(f"frame index must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class Tubelet:
    """One ground-truth referred object: a sparse frame -> Box map with identity.

    Gaps are allowed; the object may leave and re-enter the frame.
    """

    tubelet_id: str
    category: str
    boxes: Mapping[int, Box]

    def __post_init__(self):
        if not self.boxes:
            raise InputError(f"tubelet {self.tubelet_id!r} has no boxes")
        for frame in self.boxes:
            _check_frame_index(frame)
        object.__setattr__(self, "boxes", dict(self.boxes))

    def frames(self) -> FrozenSet[int]:
        return frozenset(self.boxes)


@dataclass(frozen=True)
class PredictedTubelet:
    """One prediction slot: per-frame box plus three-state probabilities.

    Temporal extent is not stored; it is derived from the per-frame state
    argmax (see derived_extent).
    """

    slot: int
    frames: Mapping[int, Tuple[Box, StateProbs]]

    def __post_init__(self):
        if not isinstance(self.slot, int) or isinstance(self.slot, bool) or self.slot < 0:
            raise InputError(f"slot must be a non-negative integer, got {self.slot!r}")
        for frame, entry in self.frames.items():
            _check_frame_index(frame)
            box, probs = entry
            if not isinstance(box, Box) or not isinstance(probs, StateProbs):
                raise InputError(f"frame {frame} entry must be (Box, StateProbs)")
        object.__setattr__(self, "frames", dict(self.frames))


def derived_extent(pred: PredictedTubelet) -> FrozenSet[int]:
    """Frames whose argmax state is "referenced".

    Ties resolve away from "referenced": an ambiguous frame never extends
    the predicted extent.
    """
    extent = set()
    for frame, (_box, probs) in pred.frames.items():
        if (probs.p_referenced > probs.p_present_unreferenced
                and probs.p_referenced > probs.p_absent):
            extent.add(frame)
    return frozenset(extent)


def tube_confidence(pred: PredictedTubelet) -> float:
    """Mean p_referenced over the derived extent; 0 when the extent is empty."""
    extent = derived_extent(pred)
    if not extent:
        return 0.0
    return sum(pred.frames[t][1].p_referenced for t in sorted(extent)) / len(extent)


@dataclass(frozen=True)
class EvalInstance:
    """One (video, description) pair with its ground-truth tubelet set."""

    instance_id: str
    video_id: str
    description: str
    entity_count: Optional[int] = None
    tubelets: Tuple[Tubelet, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tubelets", tuple(self.tubelets))
        ids = [t.tubelet_id for t in self.tubelets]
        if len(set(ids)) != len(ids):
            raise InputError(f"instance {self.instance_id!r} has duplicate tubelet ids")
        if self.entity_count is not None:
            if not isinstance(self.entity_count, int) or self.entity_count < 1:
                raise InputError(f"entity_count must be >= 1, got {self.entity_count!r}")


def _check_weight(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise InputError(f"{name} must be finite and non-negative, got {value!r}")


@dataclass(frozen=True)
class EvalConfig:
    """All knobs that affect matching or any metric value.

    class_cost_weight defaults to 0: evaluation-time matching is box-only so
    confidence calibration cannot influence localization scores. Training-loss
    mode sets it to 1 to recover the full matching cost.
    """

    num_slots: int = 15
    viou_thresholds: Tuple[float, ...] = (0.3, 0.5)
    frame_ap_threshold: float = 0.5
    video_ap_threshold: float = 0.25
    l1_weight: float = 5.0
    giou_weight: float = 2.0
    class_cost_weight: float = 0.0
    existence_mismatch_penalty: float = 2.0
    log_epsilon: float = 1e-12

    def __post_init__(self):
        if not isinstance(self.num_slots, int) or self.num_slots < 1:
            raise InputError(f"num_slots must be a positive integer, got {self.num_slots!r}")
        object.__setattr__(self, "viou_thresholds", tuple(self.viou_thresholds))
        for r in self.viou_thresholds + (self.frame_ap_threshold, self.video_ap_threshold):
            if not (0.0 < r < 1.0):
                raise InputError(f"threshold must be strictly in (0, 1), got {r!r}")
        for name in ("l1_weight", "giou_weight", "class_cost_weight",
                     "existence_mismatch_penalty"):
            _check_weight(name, getattr(self, name))
        if not (self.log_epsilon > 0 and math.isfinite(self.log_epsilon)):
            raise InputError(f"log_epsilon must be a small positive real, got {self.log_epsilon!r}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "num_slots": self.num_slots,
            "viou_thresholds": list(self.viou_thresholds),
            "frame_ap_threshold": self.frame_ap_threshold,
            "video_ap_threshold": self.video_ap_threshold,
            "l1_weight": self.l1_weight,
            "giou_weight": self.giou_weight,
            "class_cost_weight": self.class_cost_weight,
            "existence_mismatch_penalty": self.existence_mismatch_penalty,
            "log_epsilon": self.log_epsilon,
        }
