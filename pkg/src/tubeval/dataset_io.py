"""Parse, validate, serialize, and bucketize documents; synthetic fixtures.

Documents are UTF-8 JSON. Structural problems (not JSON, wrong types, missing
keys) raise ParseError; well-formed documents breaking a rule raise
ValidationError with a full Diagnostics payload. Boxes are normalized
center-form only; pixel coordinates are rejected by the range rules, never
rescaled.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (
    Box,
    EvalConfig,
    EvalInstance,
    PredictedTubelet,
    StateProbs,
    Tubelet,
)
from .errors import Diagnostics, InputError, ParseError, ValidationError

ZERO_OBJECT = "zero-object"
SINGLE_OBJECT = "single-object"
MULTI_OBJECTS = "multi-objects"

SHORT = "short"
NORMAL = "normal"
LONG = "long"

FEW = "few"
MODERATE = "moderate"
MANY = "many"
UNKNOWN = "unknown"

OBJECT_COUNT_LABELS = (ZERO_OBJECT, SINGLE_OBJECT, MULTI_OBJECTS)
LENGTH_LABELS = (SHORT, NORMAL, LONG)
ENTITY_LABELS = (FEW, MODERATE, MANY, UNKNOWN)


@dataclass(frozen=True)
class VideoInfo:
    video_id: str
    width: int
    height: int
    fps: float
    frame_count: int


@dataclass(frozen=True)
class Bucket:
    """One label per reporting dimension for an instance."""

    object_count: str
    length: str
    entities: str


def bucketize(instance: EvalInstance) -> Bucket:
    """Assign exactly one label per dimension.

    Description length is the whitespace token count; the l = 6 boundary falls
    in the "normal" band (6..9). Entity buckets come from the annotated
    entity_count; instances without one land in "unknown".
    """
    count = len(instance.tubelets)
    if count == 0:
        object_count = ZERO_OBJECT
    elif count == 1:
        object_count = SINGLE_OBJECT
    else:
        object_count = MULTI_OBJECTS

    l = len(instance.description.split())
    if l >= 10:
        length = LONG
    elif l >= 6:
        length = NORMAL
    else:
        length = SHORT

    n = instance.entity_count
    if n is None:
        entities = UNKNOWN
    elif n == 1:
        entities = FEW
    elif n <= 3:
        entities = MODERATE
    else:
        entities = MANY
    return Bucket(object_count, length, entities)


def _load_json(document) -> object:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc}") from exc


def _require(mapping, key, kind, where: str):
    if not isinstance(mapping, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in mapping:
        raise ParseError(f"{where}: missing key {key!r}")
    value = mapping[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{where}: key {key!r} must be a number")
        return float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{where}: key {key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{where}: key {key!r} must be {kind.__name__}")
    return value


def _parse_frame_key(key: str, where: str) -> int:
    if not isinstance(key, str) or not key.isdigit():
        raise ParseError(f"{where}: frame index key {key!r} must be a digit string")
    return int(key)


def _parse_box_array(raw, where: str) -> Tuple[float, float, float, float]:
    if not isinstance(raw, list) or len(raw) != 4:
        raise ParseError(f"{where}: box must be a 4-element array")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{where}: box coordinates must be numbers")
        out.append(float(v))
    return tuple(out)


def _raise_if_failed(diagnostics: Diagnostics) -> None:
    if not diagnostics.ok:
        diagnostics.errors.sort(key=lambda e: (e.instance_id, e.rule, e.message))
        diagnostics.warnings.sort(key=lambda e: (e.instance_id, e.rule, e.message))
        raise ValidationError(diagnostics)


def parse_ground_truth(document) -> Tuple[List[EvalInstance], Dict[str, VideoInfo]]:
    """Parse and fully validate a ground-truth document."""
    root = _load_json(document)
    if not isinstance(root, dict):
        raise ParseError("top level must be an object")
    raw_videos = _require(root, "videos", list, "document")
    raw_instances = _require(root, "instances", list, "document")

    diagnostics = Diagnostics()
    videos: Dict[str, VideoInfo] = {}
    for idx, raw in enumerate(raw_videos):
        where = f"videos[{idx}]"
        video = VideoInfo(
            video_id=_require(raw, "video_id", str, where),
            width=_require(raw, "width", int, where),
            height=_require(raw, "height", int, where),
            fps=_require(raw, "fps", float, where),
            frame_count=_require(raw, "frame_count", int, where),
        )
        if video.video_id in videos:
            diagnostics.error("", "duplicate-video-id", f"video {video.video_id!r} repeated")
            continue
        if video.frame_count < 1 or video.width < 1 or video.height < 1 or video.fps <= 0:
            diagnostics.error("", "video-dimensions",
                              f"video {video.video_id!r} has non-positive dimensions")
        videos[video.video_id] = video

    instances: List[EvalInstance] = []
    seen_instances = set()
    for idx, raw in enumerate(raw_instances):
        where = f"instances[{idx}]"
        instance_id = _require(raw, "instance_id", str, where)
        video_id = _require(raw, "video_id", str, where)
        description = _require(raw, "description", str, where)
        raw_tubelets = _require(raw, "tubelets", list, where)
        entity_count = raw.get("entity_count")
        ok = True
        if instance_id in seen_instances:
            diagnostics.error(instance_id, "duplicate-instance-id",
                              f"instance {instance_id!r} repeated")
            ok = False
        seen_instances.add(instance_id)
        video = videos.get(video_id)
        if video is None:
            diagnostics.error(instance_id, "unknown-video-id",
                              f"video {video_id!r} not in videos table")
            ok = False
        if entity_count is not None and (
                isinstance(entity_count, bool) or not isinstance(entity_count, int)
                or entity_count < 1):
            diagnostics.error(instance_id, "entity-count-range",
                              f"entity_count must be an integer >= 1, got {entity_count!r}")
            ok = False
            entity_count = None

        tubelets: List[Tubelet] = []
        seen_tubelets = set()
        for t_idx, raw_t in enumerate(raw_tubelets):
            t_where = f"{where}.tubelets[{t_idx}]"
            tubelet_id = _require(raw_t, "tubelet_id", str, t_where)
            category = _require(raw_t, "category", str, t_where)
            raw_boxes = _require(raw_t, "boxes", dict, t_where)
            if tubelet_id in seen_tubelets:
                diagnostics.error(instance_id, "duplicate-tubelet-id",
                                  f"tubelet {tubelet_id!r} repeated")
                ok = False
            seen_tubelets.add(tubelet_id)
            if not raw_boxes:
                diagnostics.error(instance_id, "empty-tubelet",
                                  f"tubelet {tubelet_id!r} has no boxes")
                ok = False
                continue
            boxes: Dict[int, Box] = {}
            for key, raw_box in raw_boxes.items():
                frame = _parse_frame_key(key, t_where)
                coords = _parse_box_array(raw_box, f"{t_where}.boxes[{key}]")
                if video is not None and frame >= video.frame_count:
                    diagnostics.error(instance_id, "frame-out-of-range",
                                      f"tubelet {tubelet_id!r} frame {frame} >= "
                                      f"frame_count {video.frame_count}")
                    ok = False
                    continue
                try:
                    boxes[frame] = Box(*coords)
                except InputError as exc:
                    diagnostics.error(instance_id, "box-range",
                                      f"tubelet {tubelet_id!r} frame {frame}: {exc}")
                    ok = False
            if ok and boxes:
                tubelets.append(Tubelet(tubelet_id, category, boxes))
        if ok:
            instances.append(EvalInstance(
                instance_id=instance_id,
                video_id=video_id,
                description=description,
                entity_count=entity_count,
                tubelets=tuple(tubelets),
            ))
    _raise_if_failed(diagnostics)
    return instances, videos


def serialize_ground_truth(
    instances: Sequence[EvalInstance],
    videos: Dict[str, VideoInfo],
) -> bytes:
    doc = {
        "videos": [
            {
                "video_id": v.video_id,
                "width": v.width,
                "height": v.height,
                "fps": v.fps,
                "frame_count": v.frame_count,
            }
            for v in sorted(videos.values(), key=lambda v: v.video_id)
        ],
        "instances": [
            {
                "instance_id": inst.instance_id,
                "video_id": inst.video_id,
                "description": inst.description,
                **({"entity_count": inst.entity_count}
                   if inst.entity_count is not None else {}),
                "tubelets": [
                    {
                        "tubelet_id": t.tubelet_id,
                        "category": t.category,
                        "boxes": {
                            str(f): [b.cx, b.cy, b.w, b.h]
                            for f, b in sorted(t.boxes.items())
                        },
                    }
                    for t in inst.tubelets
                ],
            }
            for inst in instances
        ],
    }
    return json.dumps(doc, indent=2).encode("utf-8")


def parse_predictions(
    document,
    gt: Tuple[Sequence[EvalInstance], Dict[str, VideoInfo]],
    cfg: EvalConfig,
) -> Dict[str, List[PredictedTubelet]]:
    """Parse and validate a prediction document against parsed ground truth.

    Instances missing from the document evaluate with zero prediction slots
    (all-absent).
    """
    instances, videos = gt
    by_id = {inst.instance_id: inst for inst in instances}
    root = _load_json(document)
    if not isinstance(root, dict):
        raise ParseError("top level must be an object")
    raw_predictions = _require(root, "predictions", list, "document")

    diagnostics = Diagnostics()
    result: Dict[str, List[PredictedTubelet]] = {
        inst.instance_id: [] for inst in instances
    }
    seen = set()
    for idx, raw in enumerate(raw_predictions):
        where = f"predictions[{idx}]"
        instance_id = _require(raw, "instance_id", str, where)
        raw_tubelets = _require(raw, "tubelets", list, where)
        instance = by_id.get(instance_id)
        if instance is None:
            diagnostics.error(instance_id, "unknown-instance-id",
                              f"instance {instance_id!r} not in ground truth")
            continue
        if instance_id in seen:
            diagnostics.error(instance_id, "duplicate-instance-id",
                              f"instance {instance_id!r} repeated")
            continue
        seen.add(instance_id)
        video = videos.get(instance.video_id)
        slots = set()
        preds: List[PredictedTubelet] = []
        ok = True
        for t_idx, raw_t in enumerate(raw_tubelets):
            t_where = f"{where}.tubelets[{t_idx}]"
            slot = _require(raw_t, "slot", int, t_where)
            raw_frames = _require(raw_t, "frames", dict, t_where)
            if slot < 0 or slot >= cfg.num_slots:
                diagnostics.error(instance_id, "slot-out-of-range",
                                  f"slot {slot} outside [0, {cfg.num_slots})")
                ok = False
                continue
            if slot in slots:
                diagnostics.error(instance_id, "duplicate-slot",
                                  f"slot {slot} repeated")
                ok = False
                continue
            slots.add(slot)
            frames: Dict[int, Tuple[Box, StateProbs]] = {}
            for key, raw_entry in raw_frames.items():
                frame = _parse_frame_key(key, t_where)
                f_where = f"{t_where}.frames[{key}]"
                coords = _parse_box_array(
                    _require(raw_entry, "box", list, f_where), f_where)
                raw_probs = _require(raw_entry, "state_probs", list, f_where)
                if len(raw_probs) != 3 or any(
                        isinstance(p, bool) or not isinstance(p, (int, float))
                        for p in raw_probs):
                    raise ParseError(f"{f_where}: state_probs must be 3 numbers")
                if video is not None and frame >= video.frame_count:
                    diagnostics.error(instance_id, "frame-out-of-range",
                                      f"slot {slot} frame {frame} >= "
                                      f"frame_count {video.frame_count}")
                    ok = False
                    continue
                try:
                    box = Box(*coords)
                except InputError as exc:
                    diagnostics.error(instance_id, "box-range",
                                      f"slot {slot} frame {frame}: {exc}")
                    ok = False
                    continue
                try:
                    probs = StateProbs(*(float(p) for p in raw_probs))
                except InputError as exc:
                    diagnostics.error(instance_id, "state-probs",
                                      f"slot {slot} frame {frame}: {exc}")
                    ok = False
                    continue
                frames[frame] = (box, probs)
            preds.append(PredictedTubelet(slot=slot, frames=frames))
        if ok:
            result[instance_id] = preds
    _raise_if_failed(diagnostics)
    return result


def serialize_predictions(pred_map: Dict[str, Sequence[PredictedTubelet]]) -> bytes:
    doc = {
        "predictions": [
            {
                "instance_id": instance_id,
                "tubelets": [
                    {
                        "slot": p.slot,
                        "frames": {
                            str(f): {
                                "box": [box.cx, box.cy, box.w, box.h],
                                "state_probs": [
                                    probs.p_referenced,
                                    probs.p_present_unreferenced,
                                    probs.p_absent,
                                ],
                            }
                            for f, (box, probs) in sorted(p.frames.items())
                        },
                    }
                    for p in sorted(preds, key=lambda p: p.slot)
                ],
            }
            for instance_id, preds in sorted(pred_map.items())
        ]
    }
    return json.dumps(doc, indent=2).encode("utf-8")


@dataclass(frozen=True)
class SyntheticParams:
    """Shape of a generated fixture set."""

    num_videos: int = 5
    instances_per_video: int = 10
    frames_per_video: int = 24
    max_tubelets: int = 3
    box_jitter: float = 0.0
    extent_clip_rate: float = 0.0

    def __post_init__(self):
        for name in ("num_videos", "instances_per_video", "frames_per_video"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be positive")
        if self.max_tubelets < 0 or self.box_jitter < 0 or not (
                0 <= self.extent_clip_rate <= 1):
            raise InputError("invalid corruption parameters")


_WORDS = ("the red fox runs while a small dog chases two birds over green "
          "hills near quiet water under bright morning light").split()


def _random_box(rng: random.Random) -> Box:
    w = rng.uniform(0.05, 0.5)
    h = rng.uniform(0.05, 0.5)
    cx = rng.uniform(w / 2, 1 - w / 2)
    cy = rng.uniform(h / 2, 1 - h / 2)
    return Box(cx, cy, w, h)


def _jittered(box: Box, amount: float, ux: float, uy: float) -> Box:
    cx = min(max(box.cx + amount * ux, box.w / 2), 1 - box.w / 2)
    cy = min(max(box.cy + amount * uy, box.h / 2), 1 - box.h / 2)
    return Box(cx, cy, box.w, box.h)


def generate_synthetic(
    seed: int,
    params: SyntheticParams,
) -> Tuple[bytes, bytes, bytes]:
    """Deterministic (ground truth, perfect predictions, corrupted predictions).

    Corruption draws its unit jitter from a stream independent of the
    amplitude, so raising box_jitter with the same seed moves every corrupted
    box monotonically further from its target.
    """
    rng = random.Random(seed)
    videos: Dict[str, VideoInfo] = {}
    instances: List[EvalInstance] = []
    for v in range(params.num_videos):
        video_id = f"video-{v:03d}"
        videos[video_id] = VideoInfo(video_id, 640, 360, 24.0, params.frames_per_video)
        for i in range(params.instances_per_video):
            instance_id = f"inst-{v:03d}-{i:03d}"
            num_tubelets = rng.randint(0, params.max_tubelets)
            tubelets = []
            for k in range(num_tubelets):
                start = rng.randrange(0, params.frames_per_video)
                length = rng.randint(1, params.frames_per_video - start)
                boxes = {
                    t: _random_box(rng)
                    for t in range(start, start + length)
                }
                tubelets.append(Tubelet(f"{instance_id}-t{k}", "object", boxes))
            n_words = rng.randint(1, 12)
            description = " ".join(rng.choice(_WORDS) for _ in range(n_words))
            entity_count = rng.randint(1, 6) if rng.random() < 0.7 else None
            instances.append(EvalInstance(
                instance_id=instance_id,
                video_id=video_id,
                description=description,
                entity_count=entity_count,
                tubelets=tuple(tubelets),
            ))

    perfect: Dict[str, List[PredictedTubelet]] = {}
    for inst in instances:
        preds = []
        for slot, t in enumerate(inst.tubelets):
            frames = {
                f: (box, StateProbs(1.0, 0.0, 0.0))
                for f, box in t.boxes.items()
            }
            preds.append(PredictedTubelet(slot=slot, frames=frames))
        perfect[inst.instance_id] = preds

    # Unit jitter draws come from their own stream so amplitude only scales them.
    jitter_rng = random.Random(seed + 1)
    corrupted: Dict[str, List[PredictedTubelet]] = {}
    for inst in instances:
        preds = []
        for slot, t in enumerate(inst.tubelets):
            frames = {}
            for f, box in sorted(t.boxes.items()):
                ux = jitter_rng.uniform(-1, 1)
                uy = jitter_rng.uniform(-1, 1)
                drop = jitter_rng.random() < params.extent_clip_rate
                new_box = _jittered(box, params.box_jitter, ux, uy)
                probs = StateProbs(0.0, 0.0, 1.0) if drop else StateProbs(1.0, 0.0, 0.0)
                frames[f] = (new_box, probs)
            preds.append(PredictedTubelet(slot=slot, frames=frames))
        corrupted[inst.instance_id] = preds

    return (
        serialize_ground_truth(instances, videos),
        serialize_predictions(perfect),
        serialize_predictions(corrupted),
    )
