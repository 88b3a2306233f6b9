"""Command-line front end: dataset validation and metric evaluation.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 config error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Sequence

from .errors import ConfigError, FormatError, ValidationError
from .formats import (
    read_ground_truth_file,
    read_triplet_file,
    validate_gt_mask_files,
    validate_pred_mask_files,
    write_report,
)
from .metrics import evaluate_dataset
from .model import (
    K_METRICS,
    METRIC_ORDER,
    MODE_BBOX,
    MODE_MASK,
    EvalConfig,
    KSpec,
    MetricReport,
    validate_dataset,
    validate_id_alignment,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CONFIG = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgeval", description="Scene graph generation evaluation toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("eval", help="evaluate predictions against ground truth")
    run.add_argument("--gt", required=True, help="ground-truth JSON file")
    run.add_argument("--pred", required=True, help="prediction triplet JSON file")
    run.add_argument("--iou-threshold", type=float, default=0.5)
    run.add_argument("--mode", choices=[MODE_MASK, MODE_BBOX], default=MODE_MASK)
    run.add_argument("--k", default="20,50,100", help="comma list of absolute k values")
    run.add_argument("--rel-k", default="1,10", help="comma list of relative k factors")
    run.add_argument("--include-infinity", action="store_true", help="also score at k = infinity")
    run.add_argument("--metrics", default=",".join(METRIC_ORDER), help="comma list of metrics")
    run.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    run.add_argument("--output", default=None, help="write the report to this file")
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--per-image", action="store_true", help="include per-image scores (JSON)")

    check = sub.add_parser("validate", help="check a prediction file for schema violations")
    check.add_argument("--pred", required=True, help="prediction triplet JSON file")
    check.add_argument("--gt", default=None, help="optional ground-truth JSON for cross checks")
    check.add_argument("--mode", choices=[MODE_MASK, MODE_BBOX], default=MODE_MASK)
    return parser


def _parse_int_list(raw: str, what: str) -> list[int]:
    values = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(int(part))
        except ValueError:
            raise ConfigError(f"{what} must be a comma list of integers, got {raw!r}") from None
    return values


def _build_config(args: argparse.Namespace) -> EvalConfig:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise ConfigError("no metrics requested")
    k_specs = [KSpec.absolute(n) for n in _parse_int_list(args.k, "--k")]
    k_specs += [KSpec.relative(f) for f in _parse_int_list(args.rel_k, "--rel-k")]
    if args.include_infinity:
        k_specs.append(KSpec.infinity())
    if not k_specs and any(m in K_METRICS for m in metrics):
        raise ConfigError(
            "a k-parameterized metric was requested but --k, --rel-k and --include-infinity "
            "provide no budget"
        )
    return EvalConfig(
        iou_threshold=args.iou_threshold,
        match_mode=args.mode,
        k_specs=tuple(k_specs),
        metrics=frozenset(metrics),
        thread_count=args.threads,
    )


def format_table(report: MetricReport) -> str:
    width = max(len("metric"), max((len(e.label) for e in report), default=0))
    lines = [f"{'metric':<{width}}   {'score':>8}  {'images':>6}"]
    for entry in report:
        score = "   n/a" if math.isnan(entry.score) else f"{entry.score:.4f}"
        lines.append(f"{entry.label:<{width}}   {score:>8}  {entry.images_counted:>6}")
    return "\n".join(lines)


def run_eval(args: argparse.Namespace) -> int:
    config = _build_config(args)
    meta, gt_records = read_ground_truth_file(args.gt)
    pred_records = read_triplet_file(args.pred)

    violations = validate_dataset(gt_records, meta)
    violations += validate_dataset(pred_records, meta)
    violations += validate_id_alignment(gt_records, pred_records)
    if config.match_mode == MODE_MASK:
        violations += validate_gt_mask_files(gt_records)
        violations += validate_pred_mask_files(pred_records, {r.id: r for r in gt_records})
    if violations:
        for violation in violations:
            print(violation, file=sys.stderr)
        print(f"validation failed with {len(violations)} violation(s)", file=sys.stderr)
        return EXIT_VALIDATION

    report = evaluate_dataset(
        gt_records, pred_records, meta, config, keep_per_image=args.per_image
    )
    print(format_table(report))
    if args.output:
        write_report(report, args.output, args.format)
    return EXIT_OK


def run_validate(args: argparse.Namespace) -> int:
    pred_records = read_triplet_file(args.pred)
    meta = None
    gt_records = None
    if args.gt:
        meta, gt_records = read_ground_truth_file(args.gt)

    violations = validate_dataset(pred_records, meta)
    if gt_records is not None:
        violations += validate_dataset(gt_records, meta)
        violations += validate_id_alignment(gt_records, pred_records)
    if args.mode == MODE_MASK:
        gt_by_id = {r.id: r for r in gt_records} if gt_records else None
        violations += validate_pred_mask_files(pred_records, gt_by_id)
        if gt_records is not None:
            violations += validate_gt_mask_files(gt_records)

    for violation in violations:
        print(violation)
    if violations:
        print(f"{len(violations)} violation(s) found", file=sys.stderr)
        return EXIT_VALIDATION
    print("no violations")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return run_eval(args)
        return run_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, ValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
