import random

import pytest

from tubeval import (
    Box,
    PrCurve,
    PredictedTubelet,
    StateProbs,
    ap_from_curve,
    frame_ap,
    m_viou,
    tiou,
    video_ap,
    viou,
    viou_at_r,
)

from conftest import make_pred, make_tubelet, perfect_pred, random_box, referenced, simple_instance

BOX = Box(0.5, 0.5, 0.2, 0.2)
FAR = Box(0.1, 0.1, 0.1, 0.1)


def noisy_pred(slot, tubelet, rng, frames=None):
    """Prediction over the given frames with random boxes."""
    frames = tubelet.frames() if frames is None else frames
    return PredictedTubelet(slot, {
        t: (random_box(rng), referenced()) for t in frames
    })


class TestViouTiou:
    def test_identical(self):
        gt = make_tubelet("t", range(4), BOX)
        pred = perfect_pred(0, gt)
        assert viou(gt, pred) == 1.0
        assert tiou(gt, pred) == 1.0

    def test_disjoint_extents(self):
        gt = make_tubelet("t", range(4), BOX)
        pred = make_pred(0, range(10, 14), BOX)
        assert viou(gt, pred) == 0.0
        assert tiou(gt, pred) == pytest.approx(0.0)

    def test_hand_fixture(self):
        # gt {0..3}, pred {2..5}, per-frame IoU 1 on the 2-frame intersection
        gt = make_tubelet("t", range(4), BOX)
        pred = make_pred(0, range(2, 6), BOX)
        assert viou(gt, pred) == pytest.approx(1 / 3, abs=1e-12)
        assert tiou(gt, pred) == pytest.approx(1 / 3, abs=1e-12)

    def test_empty_predicted_extent(self):
        gt = make_tubelet("t", range(4), BOX)
        assert tiou(gt, PredictedTubelet(0, {})) == 0.0

    def test_viou_le_tiou_randomized(self):
        rng = random.Random(2023)
        for _ in range(10_000):
            start = rng.randrange(0, 8)
            gt = make_tubelet("t", range(start, start + rng.randint(1, 6)),
                              random_box(rng))
            p_start = rng.randrange(0, 8)
            pred = noisy_pred(0, gt, rng, range(p_start, p_start + rng.randint(1, 6)))
            assert viou(gt, pred) <= tiou(gt, pred)


class TestAggregates:
    def test_m_viou_mean(self):
        gt_a = make_tubelet("a", range(5), BOX)
        # vIoU 0.4: intersection 2 of union 5 at IoU 1.0
        pred_a = make_pred(0, range(2), BOX)
        gt_b = make_tubelet("b", range(5), BOX)
        # vIoU 0.6: intersection 3 of union 5 at IoU 1.0
        pred_b = make_pred(1, range(3), BOX)
        assert viou(gt_a, pred_a) == pytest.approx(0.4)
        assert viou(gt_b, pred_b) == pytest.approx(0.6)
        assert m_viou([(gt_a, pred_a), (gt_b, pred_b)]) == pytest.approx(0.5)

    def test_m_viou_empty(self):
        assert m_viou([]) == 0.0

    def test_flat_weighting_across_instances(self):
        gt = make_tubelet("t", range(4), BOX)
        perfect = perfect_pred(0, gt)
        half = make_pred(0, range(2), BOX)  # vIoU 0.5
        pairs = [(gt, perfect)] * 3 + [(gt, half)]
        assert m_viou(pairs) == pytest.approx((3 + 0.5) / 4)

    def test_viou_at_r(self):
        gt = make_tubelet("t", range(5), BOX)
        pairs = [
            (gt, make_pred(0, range(1), BOX)),  # vIoU 0.2
            (gt, make_pred(1, range(2), BOX)),  # vIoU 0.4
            (gt, make_pred(2, range(3), BOX)),  # vIoU 0.6
        ]
        assert viou_at_r(pairs, 0.3) == pytest.approx(2 / 3)
        assert viou_at_r(pairs, 0.5) == pytest.approx(1 / 3)
        assert viou_at_r(pairs, 0.9) == 0.0

    def test_viou_at_r_strict(self):
        gt = make_tubelet("t", range(2), BOX)
        pairs = [(gt, make_pred(0, range(1), BOX))]  # vIoU exactly 0.5
        assert viou_at_r(pairs, 0.5) == 0.0

    def test_viou_at_r_non_increasing(self):
        rng = random.Random(3)
        gt = make_tubelet("t", range(6), BOX)
        pairs = [(gt, noisy_pred(k, gt, rng)) for k in range(20)]
        values = [viou_at_r(pairs, r) for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestApFromCurve:
    def test_single_perfect_point(self):
        assert ap_from_curve(PrCurve(((1.0, 1.0),), 1)) == 1.0

    def test_two_points(self):
        curve = PrCurve(((0.5, 1.0), (1.0, 0.5)), 2)
        assert ap_from_curve(curve) == pytest.approx(0.75, abs=1e-12)

    def test_empty(self):
        assert ap_from_curve(PrCurve((), 3)) == 0.0


def brute_force_ap(scored, num_gt):
    """Independent oracle: walk every confidence-ordered prefix, integrate
    the all-point envelope directly."""
    if num_gt == 0:
        return 0.0
    ordered = sorted(scored, key=lambda d: -d[0])
    prefixes = []
    tp = 0
    for k, (conf, is_tp) in enumerate(ordered, start=1):
        tp += int(is_tp)
        prefixes.append((tp / num_gt, tp / k))
    ap = 0.0
    prev = 0.0
    for recall, _ in prefixes:
        if recall <= prev:
            continue
        best = max(p for r, p in prefixes if r >= recall)
        ap += (recall - prev) * best
        prev = recall
    return ap


class TestFrameAp:
    def test_perfect(self):
        gt = make_tubelet("t", range(4), BOX)
        instance = simple_instance("i", [gt])
        preds = {"i": [perfect_pred(0, gt)]}
        assert frame_ap([instance], preds, 0.5) == 1.0

    def test_no_predictions(self):
        gt = make_tubelet("t", range(4), BOX)
        instance = simple_instance("i", [gt])
        assert frame_ap([instance], {}, 0.5) == 0.0

    def test_fp_then_tp(self):
        # 1 gt box; confident miss then a correct hit -> AP 0.5
        gt = make_tubelet("t", [0], BOX)
        instance = simple_instance("i", [gt])
        preds = {"i": [
            PredictedTubelet(0, {0: (FAR, StateProbs(0.95, 0.05, 0.0))}),
            PredictedTubelet(1, {0: (BOX, StateProbs(0.9, 0.1, 0.0))}),
        ]}
        assert frame_ap([instance], preds, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(17)
        for _ in range(200):
            num_frames = rng.randint(1, 3)
            gt = make_tubelet("t", range(num_frames), BOX)
            instance = simple_instance("i", [gt])
            slots = []
            for slot in range(rng.randint(0, 4)):
                frames = {}
                for t in range(num_frames):
                    if rng.random() < 0.7:
                        box = BOX if rng.random() < 0.5 else random_box(rng)
                        frames[t] = (box, referenced(round(rng.uniform(0.55, 1.0), 3)))
                slots.append(PredictedTubelet(slot, frames))
            r = 0.5
            from tubeval.metrics import _greedy_frame
            dets, num_gt = _greedy_frame(instance, slots, r)
            expected = brute_force_ap(
                [(d.confidence, d.is_tp) for d in dets], num_gt)
            got = frame_ap([instance], {"i": slots}, r)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_rank_invariance(self):
        rng = random.Random(23)
        gt = make_tubelet("t", range(3), BOX)
        instance = simple_instance("i", [gt])
        confs = [0.9, 0.7, 0.4]
        def build(transform):
            return {"i": [
                PredictedTubelet(k, {
                    t: (BOX if (k + t) % 2 == 0 else random_box(rng),
                        referenced(transform(confs[k])))
                    for t in range(3)
                })
                for k in range(3)
            ]}
        rng_state = rng.getstate()
        base = frame_ap([instance], build(lambda c: c), 0.5)
        rng.setstate(rng_state)
        squared = frame_ap([instance], build(lambda c: c * c), 0.5)
        assert base == squared


class TestVideoAp:
    def test_perfect(self):
        gt = make_tubelet("t", range(4), BOX)
        instance = simple_instance("i", [gt])
        assert video_ap([instance], {"i": [perfect_pred(0, gt)]}, 0.25) == 1.0

    def test_all_extents_empty(self):
        gt = make_tubelet("t", range(4), BOX)
        instance = simple_instance("i", [gt])
        preds = {"i": [PredictedTubelet(0, {
            t: (BOX, StateProbs(0.0, 0.0, 1.0)) for t in range(4)
        })]}
        assert video_ap([instance], preds, 0.25) == 0.0

    def test_tp_and_fp(self):
        # 2 gt tubes: one good match at conf 0.9, one confident miss at 0.95.
        # Oracle-derived: detections order FP, TP -> PR (0, 0), (0.5, 0.5);
        # all-point area 0.25.
        gt_a = make_tubelet("a", range(5), BOX)
        gt_b = make_tubelet("b", range(5), FAR)
        instance = simple_instance("i", [gt_a, gt_b])
        good = PredictedTubelet(0, {
            t: (BOX, StateProbs(0.9, 0.1, 0.0)) for t in range(4)
        })  # vIoU 0.8 against gt_a
        miss = PredictedTubelet(1, {
            t: (Box(0.85, 0.85, 0.1, 0.1), StateProbs(0.95, 0.05, 0.0))
            for t in range(5)
        })  # overlaps nothing above 0.25
        assert viou(gt_a, good) == pytest.approx(0.8)
        got = video_ap([instance], {"i": [good, miss]}, 0.25)
        expected = brute_force_ap([(0.95, False), (0.9, True)], 2)
        assert got == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.25, abs=1e-12)

    def test_zero_gt_instances_count_fps(self):
        gt = make_tubelet("t", range(4), BOX)
        with_gt = simple_instance("a", [gt])
        empty = simple_instance("b", [])
        preds = {
            "a": [make_pred(0, range(4), BOX, p_ref=0.9)],
            "b": [make_pred(0, range(4), BOX, p_ref=0.99)],
        }
        full = video_ap([with_gt, empty], preds, 0.25)
        alone = video_ap([with_gt], {"a": preds["a"]}, 0.25)
        assert full < alone == 1.0
