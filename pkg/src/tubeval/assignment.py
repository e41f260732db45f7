"""Tubelet-wise matching: per-frame cost, cost aggregation, Hungarian solver.

The cost matrix is padded square with "no object" rows of all zeros, so slots
beyond the ground-truth count match a zero row and come out unmatched. The
solver is exact; ties between optimal permutations break toward the
lexicographically smallest one so reports are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    Box,
    EvalConfig,
    EvalInstance,
    PredictedTubelet,
    StateProbs,
    Tubelet,
    derived_extent,
)
from .errors import InputError
from .geometry import box_loss

BRUTE_FORCE_MAX = 8


@dataclass(frozen=True)
class CostMatrix:
    """Square matching-cost matrix; rows beyond num_real_rows are zero padding."""

    values: np.ndarray
    num_real_rows: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InputError(f"cost matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("cost matrix entries must be finite")
        if not (0 <= self.num_real_rows <= arr.shape[0]):
            raise InputError("num_real_rows out of range")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Assignment:
    """Permutation from row index to column index, plus its total cost."""

    mapping: Tuple[int, ...]
    total_cost: float

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise InputError("assignment mapping must be a bijection over [0, n)")


def frame_match_cost(
    gt: Optional[Tuple[str, Box]],
    pred: Tuple[Box, StateProbs],
    cfg: EvalConfig,
) -> float:
    """Matching cost at one frame where both sides have data.

    A "no object" ground truth zeroes both terms. Otherwise the cost is the
    class term (weighted negative log probability of "referenced") plus the
    box regression cost.
    """
    if gt is None:
        return 0.0
    _category, gt_box = gt
    pred_box, probs = pred
    cost = box_loss(pred_box, gt_box, cfg)
    if cfg.class_cost_weight > 0.0:
        cost += cfg.class_cost_weight * -math.log(max(probs.p_referenced, cfg.log_epsilon))
    return cost


def _pair_cost(gt: Tubelet, pred: PredictedTubelet, cfg: EvalConfig) -> float:
    """Mean matching cost over the union of gt frames and the pred's derived extent."""
    gt_frames = gt.frames()
    pred_extent = derived_extent(pred)
    union = gt_frames | pred_extent
    total = 0.0
    for t in sorted(union):
        if t in gt_frames and t in pred_extent:
            total += frame_match_cost((gt.category, gt.boxes[t]), pred.frames[t], cfg)
        else:
            total += cfg.existence_mismatch_penalty
    return total / len(union)


def tubelet_cost_matrix(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    cfg: EvalConfig,
) -> CostMatrix:
    """Square cost matrix: one row per gt tubelet (zero rows pad to the slot count)."""
    if len(preds) > cfg.num_slots:
        raise InputError(f"{len(preds)} predictions exceed num_slots={cfg.num_slots}")
    if len(instance.tubelets) > len(preds):
        raise InputError(
            f"instance {instance.instance_id!r} has more tubelets "
            f"({len(instance.tubelets)}) than prediction slots ({len(preds)})"
        )
    n = len(preds)
    values = np.zeros((n, n), dtype=np.float64)
    for i, gt in enumerate(instance.tubelets):
        for k, pred in enumerate(preds):
            values[i, k] = _pair_cost(gt, pred, cfg)
    return CostMatrix(values, num_real_rows=len(instance.tubelets))


def _perm_cost(values: np.ndarray, mapping: Sequence[int]) -> float:
    """Total cost of a permutation, summed in row order (canonical float order)."""
    total = 0.0
    for i, c in enumerate(mapping):
        total += float(values[i, c])
    return total


def _lex_smallest(values: np.ndarray, mapping: List[int], opt: float) -> List[int]:
    """Refine an optimal permutation to the lexicographically smallest optimal one.

    Walks rows in order; for each row tries unused columns smaller than the
    current choice and keeps one iff an exactly-optimal completion still
    exists. Exact equality only affects genuine ties (e.g. zero padding rows).
    """
    n = len(mapping)
    mapping = list(mapping)
    used: List[int] = []
    prefix = 0.0
    for i in range(n):
        unused = sorted(set(range(n)) - set(used))
        for c in unused:
            if c == mapping[i]:
                break
            rest_rows = list(range(i + 1, n))
            rest_cols = [k for k in unused if k != c]
            total = prefix + float(values[i, c])
            completion: List[int] = []
            if rest_rows:
                sub = values[np.ix_(rest_rows, rest_cols)]
                rr, cc = linear_sum_assignment(sub)
                completion = [0] * len(rest_rows)
                for r_idx, c_idx in zip(rr, cc):
                    completion[r_idx] = rest_cols[c_idx]
                for r, col in zip(rest_rows, completion):
                    total += float(values[r, col])
            if total == opt:
                mapping[i] = c
                for r, col in zip(rest_rows, completion):
                    mapping[r] = col
                break
        used.append(mapping[i])
        prefix += float(values[i, mapping[i]])
    return mapping


def hungarian(costs: CostMatrix) -> Assignment:
    """Exact minimum-cost assignment; ties break to the lexicographically smallest map."""
    values = costs.values
    rows, cols = linear_sum_assignment(values)
    mapping = [0] * costs.size
    for r, c in zip(rows, cols):
        mapping[r] = int(c)
    opt = _perm_cost(values, mapping)
    mapping = _lex_smallest(values, mapping, opt)
    return Assignment(tuple(mapping), _perm_cost(values, mapping))


@lru_cache(maxsize=None)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def brute_force_assignment(costs: CostMatrix) -> Assignment:
    """Exhaustive minimum over all permutations; the test oracle for hungarian().

    Refuses matrices larger than 8x8 (factorial blowup). Among tied optima the
    lexicographically smallest permutation wins.
    """
    n = costs.size
    if n > BRUTE_FORCE_MAX:
        raise InputError(f"brute force refuses n={n} > {BRUTE_FORCE_MAX}")
    if n == 0:
        return Assignment((), 0.0)
    perms = _all_permutations(n)
    totals = costs.values[np.arange(n), perms].sum(axis=1)
    best = int(np.flatnonzero(totals == totals.min())[0])
    mapping = tuple(int(c) for c in perms[best])
    return Assignment(mapping, _perm_cost(costs.values, mapping))


def min_injection_cost(costs: CostMatrix) -> float:
    """Exhaustive minimum cost of assigning the real rows into distinct columns.

    Equals the full-matrix optimum because padding rows cost zero everywhere.
    Used by the CLI oracle check, where the padded matrix is too large to
    enumerate but the real row count is small. In an optimal injection each
    row takes one of its r cheapest columns (a cheaper free column would be a
    strict improvement), so candidates are pruned to those.
    """
    r = costs.num_real_rows
    if r == 0:
        return 0.0
    if r > BRUTE_FORCE_MAX:
        raise InputError(f"injection brute force refuses {r} real rows > {BRUTE_FORCE_MAX}")
    values = costs.values
    candidates = []
    for i in range(r):
        row = values[i]
        threshold = np.sort(row)[r - 1]
        cols = [int(c) for c in np.flatnonzero(row <= threshold)]
        candidates.append(cols)

    best = math.inf

    def recurse(i: int, used: set, acc: float) -> None:
        nonlocal best
        if acc >= best:
            return
        if i == r:
            best = acc
            return
        for c in candidates[i]:
            if c not in used:
                used.add(c)
                recurse(i + 1, used, acc + float(values[i, c]))
                used.remove(c)

    recurse(0, set(), 0.0)
    return best


def _padded_preds(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    cfg: EvalConfig,
) -> List[PredictedTubelet]:
    """Predictions sorted by slot, padded with empty slots up to the gt count."""
    if len(preds) > cfg.num_slots:
        raise InputError(f"{len(preds)} predictions exceed num_slots={cfg.num_slots}")
    ordered = sorted(preds, key=lambda p: p.slot)
    slots = [p.slot for p in ordered]
    if len(set(slots)) != len(slots):
        raise InputError("duplicate prediction slots")
    next_slot = (max(slots) + 1) if slots else 0
    while len(ordered) < len(instance.tubelets):
        ordered.append(PredictedTubelet(slot=next_slot, frames={}))
        next_slot += 1
    return ordered


def instance_assignment(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    cfg: EvalConfig,
) -> Assignment:
    """Optimal row-to-slot assignment for one instance (predictions in slot order)."""
    ordered = _padded_preds(instance, preds, cfg)
    return hungarian(tubelet_cost_matrix(instance, ordered, cfg))


def match_tubelets(
    instance: EvalInstance,
    preds: Sequence[PredictedTubelet],
    cfg: EvalConfig,
) -> List[Tuple[Tubelet, PredictedTubelet]]:
    """One (gt tubelet, prediction) pair per ground-truth tubelet.

    Padding rows produce no pair; if there are fewer prediction slots than gt
    tubelets the shortfall is matched against empty slots. Deterministic:
    predictions are normalized to slot order before matching.
    """
    ordered = _padded_preds(instance, preds, cfg)
    if not instance.tubelets:
        return []
    costs = tubelet_cost_matrix(instance, ordered, cfg)
    assignment = hungarian(costs)
    return [
        (gt, ordered[assignment.mapping[i]])
        for i, gt in enumerate(instance.tubelets)
    ]
