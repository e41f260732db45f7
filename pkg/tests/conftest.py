import random

import pytest

from tubeval import Box, EvalInstance, PredictedTubelet, StateProbs, Tubelet


def random_box(rng: random.Random) -> Box:
    w = rng.uniform(0.0, 1.0)
    h = rng.uniform(0.0, 1.0)
    cx = rng.uniform(w / 2, 1 - w / 2)
    cy = rng.uniform(h / 2, 1 - h / 2)
    return Box(cx, cy, w, h)


def referenced(p: float = 1.0) -> StateProbs:
    return StateProbs(p, 0.0, 1.0 - p)


def absent() -> StateProbs:
    return StateProbs(0.0, 0.0, 1.0)


def make_tubelet(tubelet_id: str, frames, box: Box) -> Tubelet:
    return Tubelet(tubelet_id, "object", {t: box for t in frames})


def make_pred(slot: int, frames, box: Box, p_ref: float = 1.0) -> PredictedTubelet:
    return PredictedTubelet(slot, {t: (box, referenced(p_ref)) for t in frames})


def perfect_pred(slot: int, tubelet: Tubelet) -> PredictedTubelet:
    return PredictedTubelet(
        slot, {t: (box, referenced()) for t, box in tubelet.boxes.items()})


@pytest.fixture
def box_a() -> Box:
    # corners (0, 0, 0.5, 0.5)
    return Box(0.25, 0.25, 0.5, 0.5)


@pytest.fixture
def box_b() -> Box:
    # corners (0.25, 0, 0.75, 0.5)
    return Box(0.5, 0.25, 0.5, 0.5)


def simple_instance(instance_id: str, tubelets) -> EvalInstance:
    return EvalInstance(
        instance_id=instance_id,
        video_id="video-0",
        description="a test description",
        tubelets=tuple(tubelets),
    )
