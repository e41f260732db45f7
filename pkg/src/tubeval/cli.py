"""Command line entry point.

Exit codes: 0 success, 1 validation error, 2 parse error, 3 oracle mismatch.
Diagnostics go to stderr as JSON so callers can consume them mechanically.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .core import EvalConfig
from .dataset_io import SyntheticParams, generate_synthetic
from .errors import InputError, ParseError, ValidationError
from .report import BUCKET_DIMENSIONS, OracleMismatch, evaluate, render_report

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_ORACLE = 3


def _thresholds(raw: str):
    try:
        values = tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {raw!r}")
    if not values:
        raise argparse.ArgumentTypeError("threshold list is empty")
    return values


def _buckets(raw: str):
    dims = tuple(raw.split(","))
    for dim in dims:
        if dim not in BUCKET_DIMENSIONS:
            raise argparse.ArgumentTypeError(f"unknown bucket dimension {dim!r}")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubeval",
        description="Evaluate multi-object tubelet predictions against ground truth.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="compute the bucketed metrics report")
    ev.add_argument("--gt", required=True, type=Path, help="ground-truth JSON file")
    ev.add_argument("--pred", required=True, type=Path, help="prediction JSON file")
    ev.add_argument("--viou-thresholds", type=_thresholds, default=(0.3, 0.5),
                    metavar="R,R", help="comma-separated vIoU@R thresholds")
    ev.add_argument("--frame-ap-threshold", type=float, default=0.5)
    ev.add_argument("--video-ap-threshold", type=float, default=0.25)
    ev.add_argument("--num-slots", type=int, default=15,
                    help="number of prediction slots per instance")
    ev.add_argument("--buckets", type=_buckets, default=BUCKET_DIMENSIONS,
                    metavar="DIM,DIM", help="object-count,length,entities")
    ev.add_argument("--format", choices=("json", "table"), default="json")
    ev.add_argument("--out", type=Path, default=None,
                    help="write the report here instead of stdout")
    ev.add_argument("--jobs", type=int, default=1, help="parallel instance workers")
    ev.add_argument("--check-oracle", action="store_true",
                    help="cross-check hungarian against brute force per instance")

    sy = sub.add_parser("synth", help="generate deterministic synthetic fixtures")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--videos", type=int, default=5)
    sy.add_argument("--instances-per-video", type=int, default=10)
    sy.add_argument("--frames", type=int, default=24)
    sy.add_argument("--max-tubelets", type=int, default=3)
    sy.add_argument("--box-jitter", type=float, default=0.0)
    sy.add_argument("--extent-clip-rate", type=float, default=0.0)
    sy.add_argument("--out-dir", type=Path, required=True)
    return parser


def _run_evaluate(args) -> int:
    cfg = EvalConfig(
        num_slots=args.num_slots,
        viou_thresholds=args.viou_thresholds,
        frame_ap_threshold=args.frame_ap_threshold,
        video_ap_threshold=args.video_ap_threshold,
    )
    try:
        gt_doc = args.gt.read_bytes()
        pred_doc = args.pred.read_bytes()
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    try:
        report = evaluate(gt_doc, pred_doc, cfg, buckets=args.buckets,
                          jobs=args.jobs, check_oracle=args.check_oracle)
    except ParseError as exc:
        print(json.dumps({"error": "parse", "message": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        payload = {"error": "validation", "message": str(exc),
                   "diagnostics": exc.diagnostics.to_dict()}
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_VALIDATION
    except OracleMismatch as exc:
        print(json.dumps({"error": "oracle", "message": str(exc)}), file=sys.stderr)
        return EXIT_ORACLE
    except InputError as exc:
        print(json.dumps({"error": "input", "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    text = render_report(report, args.format)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _run_synth(args) -> int:
    params = SyntheticParams(
        num_videos=args.videos,
        instances_per_video=args.instances_per_video,
        frames_per_video=args.frames,
        max_tubelets=args.max_tubelets,
        box_jitter=args.box_jitter,
        extent_clip_rate=args.extent_clip_rate,
    )
    gt, perfect, corrupted = generate_synthetic(args.seed, params)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "ground_truth.json").write_bytes(gt)
    (args.out_dir / "predictions_perfect.json").write_bytes(perfect)
    (args.out_dir / "predictions_corrupted.json").write_bytes(corrupted)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "evaluate":
        return _run_evaluate(args)
    return _run_synth(args)


if __name__ == "__main__":
    sys.exit(main())
