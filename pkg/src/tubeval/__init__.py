"""Tubelet grounding evaluation: matching, reference losses, metric suite."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Box,
    EvalConfig,
    EvalInstance,
    PredictedTubelet,
    StateProbs,
    Tubelet,
    derived_extent,
    tube_confidence,
)
from .errors import (  # noqa: E402
    Diagnostics,
    InputError,
    ParseError,
    TubevalError,
    ValidationError,
)
from .geometry import box_loss, giou, iou, l1_distance  # noqa: E402
from .assignment import (  # noqa: E402
    Assignment,
    CostMatrix,
    brute_force_assignment,
    frame_match_cost,
    hungarian,
    instance_assignment,
    match_tubelets,
    tubelet_cost_matrix,
)
from .losses import LossWeights, classification_loss, hungarian_loss, temporal_loss  # noqa: E402
from .metrics import (  # noqa: E402
    PrCurve,
    ScoredDetection,
    ap_from_curve,
    frame_ap,
    m_viou,
    tiou,
    video_ap,
    viou,
    viou_at_r,
)
from .dataset_io import (  # noqa: E402
    Bucket,
    SyntheticParams,
    VideoInfo,
    bucketize,
    generate_synthetic,
    parse_ground_truth,
    parse_predictions,
    serialize_ground_truth,
    serialize_predictions,
)
from .report import OracleMismatch, evaluate, evaluate_parsed, render_report  # noqa: E402

__all__ = [
    "__version__",
    "Box", "EvalConfig", "EvalInstance", "PredictedTubelet", "StateProbs",
    "Tubelet", "derived_extent", "tube_confidence",
    "Diagnostics", "InputError", "ParseError", "TubevalError", "ValidationError",
    "box_loss", "giou", "iou", "l1_distance",
    "Assignment", "CostMatrix", "brute_force_assignment", "frame_match_cost",
    "hungarian", "instance_assignment", "match_tubelets", "tubelet_cost_matrix",
    "LossWeights", "classification_loss", "hungarian_loss", "temporal_loss",
    "PrCurve", "ScoredDetection", "ap_from_curve", "frame_ap", "m_viou",
    "tiou", "video_ap", "viou", "viou_at_r",
    "Bucket", "SyntheticParams", "VideoInfo", "bucketize", "generate_synthetic",
    "parse_ground_truth", "parse_predictions", "serialize_ground_truth",
    "serialize_predictions",
    "OracleMismatch", "evaluate", "evaluate_parsed", "render_report",
]
