"""Triplet selection, per-image metric scores, and dataset aggregation.

Every per-image pipeline is the same four steps: select a subset of the
model's ordered triplets, match predicted instances to ground truth, rewrite
the selected triplets onto ground-truth indices, and score the result against
the ground-truth triplet set. Dataset scores are plain means of the per-image
scores over the images that contribute.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .formats import read_gt_masks, read_prediction_masks
from .matching import MatchMapping, get_mapping, instance_recall
from .model import (
    K_METRICS,
    METRIC_ORDER,
    MODE_MASK,
    DatasetMeta,
    EvalConfig,
    ImageRecord,
    KSpec,
    MetricEntry,
    MetricReport,
    Triplet,
)

GRAPH_CONSTRAINED = "graph"
NO_GRAPH_CONSTRAINT = "no-graph"


@dataclass(frozen=True)
class SelectionRule:
    """How to pick triplets from the model's confidence-ordered sequence.

    Graph-constrained selection keeps the first triplet per (subject, object)
    pair; unconstrained selection keeps the first occurrence of each exact
    triplet, so second-guess predicates survive. ``budget`` of None is
    unbounded.
    """

    constraint: str
    budget: int | None = None

    def __post_init__(self) -> None:
        if self.constraint not in (GRAPH_CONSTRAINED, NO_GRAPH_CONSTRAINT):
            raise ValueError(f"unknown constraint: {self.constraint!r}")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")


def select_triplets(ordered: Sequence[Triplet], rule: SelectionRule) -> list[Triplet]:
    """Scan the confidence-ordered triplets and keep at most ``budget`` of them.

    Selection happens before instance matching.
    """
    kept: list[Triplet] = []
    seen: set = set()
    constrained = rule.constraint == GRAPH_CONSTRAINED
    for t in ordered:
        if rule.budget is not None and len(kept) >= rule.budget:
            break
        key = t.pair if constrained else t
        if key in seen:
            continue
        seen.add(key)
        kept.append(t)
    return kept


def recall_at_k(gt: set[Triplet], matched: set[Triplet]) -> float:
    """|gt ∩ matched| / |gt|."""
    if not gt:
        raise ValueError("recall is undefined for an empty ground truth")
    return len(gt & matched) / len(gt)


def mean_recall_at_k(meta: DatasetMeta, gt: set[Triplet], matched: set[Triplet]) -> float:
    """Recall averaged with equal weight over the predicate classes present in gt."""
    if not gt:
        raise ValueError("mean recall is undefined for an empty ground truth")
    gt_by_pred: dict[int, set[Triplet]] = {}
    for t in gt:
        gt_by_pred.setdefault(t.predicate, set()).add(t)
    total = 0.0
    for predicate in sorted(gt_by_pred):
        gt_p = gt_by_pred[predicate]
        hits = sum(1 for t in matched if t.predicate == predicate and t in gt_p)
        total += hits / len(gt_p)
    return total / len(gt_by_pred)


def pair_recall_at_k(gt: set[Triplet], matched: set[Triplet]) -> float:
    """Recall over (subject, object) pairs, ignoring the predicted predicate."""
    if not gt:
        raise ValueError("pair recall is undefined for an empty ground truth")
    gt_pairs = {t.pair for t in gt}
    matched_pairs = {t.pair for t in matched}
    return len(gt_pairs & matched_pairs) / len(gt_pairs)


def recall_at_infinity(gt: set[Triplet], mapping: MatchMapping) -> float:
    """Best achievable recall given only which instances were matched."""
    if not gt:
        raise ValueError("recall is undefined for an empty ground truth")
    matched_gt = mapping.gt_to_pred
    reachable = sum(1 for t in gt if t.sbj in matched_gt and t.obj in matched_gt)
    return reachable / len(gt)


def mean_recall_at_infinity(meta: DatasetMeta, gt: set[Triplet], mapping: MatchMapping) -> float:
    """Per-predicate mean of the best achievable recall (see recall_at_infinity)."""
    if not gt:
        raise ValueError("mean recall is undefined for an empty ground truth")
    matched_gt = mapping.gt_to_pred
    per_pred: dict[int, list[int]] = {}
    for t in gt:
        hit = 1 if t.sbj in matched_gt and t.obj in matched_gt else 0
        per_pred.setdefault(t.predicate, []).append(hit)
    total = 0.0
    for predicate in sorted(per_pred):
        hits = per_pred[predicate]
        total += sum(hits) / len(hits)
    return total / len(per_pred)


def pair_recall_at_infinity(gt: set[Triplet], mapping: MatchMapping) -> float:
    """Fraction of distinct ground-truth pairs whose endpoints both have a match."""
    if not gt:
        raise ValueError("pair recall is undefined for an empty ground truth")
    matched_gt = mapping.gt_to_pred
    gt_pairs = {t.pair for t in gt}
    reachable = sum(1 for s, o in gt_pairs if s in matched_gt and o in matched_gt)
    return reachable / len(gt_pairs)


def predicate_rank(
    meta: DatasetMeta, gt: set[Triplet], matched_sequence: Sequence[Triplet]
) -> float | None:
    """Average rank of the correct predicate per ground-truth pair; 0 is best.

    ``matched_sequence`` holds all matched triplets in the model's confidence
    order; a triplet's rank is the number of earlier matched triplets sharing
    its (subject, object) pair. Ranks of matched ground-truth triplets are
    averaged within each predicate class, then across classes. Returns None
    when no ground-truth triplet was matched at all, in which case the image
    is skipped.
    """
    ranks: dict[Triplet, int] = {}
    pair_counts: dict[tuple[int, int], int] = {}
    for t in matched_sequence:
        if t in ranks:  # exact duplicates keep their first (most confident) rank
            continue
        rank = pair_counts.get(t.pair, 0)
        ranks[t] = rank
        pair_counts[t.pair] = rank + 1

    per_pred: dict[int, list[int]] = {}
    for t in gt:
        rank = ranks.get(t)
        if rank is None:
            continue
        per_pred.setdefault(t.predicate, []).append(rank)
    if not per_pred:
        return None
    total = 0.0
    for predicate in sorted(per_pred):
        values = per_pred[predicate]
        total += sum(values) / len(values)
    return total / len(per_pred)


def metric_labels(config: EvalConfig) -> list[tuple[str, str, KSpec | None]]:
    """(label, metric, k) rows in report order: metric families first, then
    instance recall and predicate rank; budgets ascending, relative after
    absolute, infinity last."""
    specs = sorted(dict.fromkeys(config.k_specs), key=lambda s: s.sort_key)
    rows: list[tuple[str, str, KSpec | None]] = []
    for metric in METRIC_ORDER:
        if metric not in config.metrics:
            continue
        if metric in K_METRICS:
            rows.extend((f"{metric}@{spec.suffix}", metric, spec) for spec in specs)
        else:
            rows.append((metric, metric, None))
    return rows


def _load_image_masks(record: ImageRecord, expected_shape, *, ground_truth: bool):
    if record.mask_source is None:
        side = "ground-truth" if ground_truth else "prediction"
        raise ValidationError(f"image {record.id}: {side} has no mask file but match mode is mask")
    if ground_truth:
        masks = read_gt_masks(record.mask_source, len(record.instances))
    else:
        masks = read_prediction_masks(record.mask_source)
        if len(masks) != len(record.instances):
            raise ValidationError(
                f"image {record.id}: mask file has {len(masks)} pages but the image lists "
                f"{len(record.instances)} instances"
            )
    for i, mask in enumerate(masks):
        if mask.shape != expected_shape:
            raise ValidationError(
                f"image {record.id}: mask {i} has shape {mask.shape}, image is {expected_shape}"
            )
    return masks


def _map_triplet(mapping: MatchMapping, t: Triplet) -> Triplet | None:
    lookup = mapping.pred_to_gt
    if t.sbj in lookup and t.obj in lookup:
        return Triplet(lookup[t.sbj], t.predicate, lookup[t.obj])
    return None


def evaluate_image(
    gt_record: ImageRecord,
    pred_record: ImageRecord,
    meta: DatasetMeta,
    config: EvalConfig,
    *,
    gt_masks=None,
    pred_masks=None,
) -> dict[str, float | None]:
    """Score one image for every configured metric label.

    Returns a label -> score dict where None marks a skipped metric:
    triplet metrics when the image has no ground-truth triplets, InstR when it
    has no ground-truth instances, PRank when no ground-truth triplet matched.
    In mask mode, masks are read from the records' mask files unless passed in.
    """
    rows = metric_labels(config)
    gt_set = set(gt_record.triplets)
    scores: dict[str, float | None] = {}

    if gt_record.instances and pred_record.instances:
        if config.match_mode == MODE_MASK:
            expected = (gt_record.height, gt_record.width)
            if gt_masks is None:
                gt_masks = _load_image_masks(gt_record, expected, ground_truth=True)
            if pred_masks is None:
                pred_masks = _load_image_masks(pred_record, expected, ground_truth=False)
        mapping = get_mapping(
            pred_record.instances,
            gt_record.instances,
            config.iou_threshold,
            config.match_mode,
            pred_masks=pred_masks,
            gt_masks=gt_masks,
        )
    else:
        mapping = MatchMapping()

    need_gc = any(metric in ("R", "mR", "PR") for _, metric, _ in rows)
    need_ngc = "PRank" in config.metrics or any(
        metric in ("ngR", "mNgR") for _, metric, _ in rows
    )
    mapped_gc: list[Triplet | None] = []
    mapped_ngc: list[Triplet | None] = []
    if gt_set:
        if need_gc:
            gc_full = select_triplets(pred_record.triplets, SelectionRule(GRAPH_CONSTRAINED))
            mapped_gc = [_map_triplet(mapping, t) for t in gc_full]
        if need_ngc:
            ngc_full = select_triplets(pred_record.triplets, SelectionRule(NO_GRAPH_CONSTRAINT))
            mapped_ngc = [_map_triplet(mapping, t) for t in ngc_full]

    for label, metric, spec in rows:
        if metric == "InstR":
            if gt_record.instances:
                scores[label] = instance_recall(mapping, len(gt_record.instances))
            else:
                scores[label] = None
            continue
        if not gt_set:
            scores[label] = None
            continue
        if metric == "PRank":
            matched_sequence = [t for t in mapped_ngc if t is not None]
            scores[label] = predicate_rank(meta, gt_set, matched_sequence)
            continue
        assert spec is not None
        if spec.kind == "infinity":
            if metric in ("R", "ngR"):
                scores[label] = recall_at_infinity(gt_set, mapping)
            elif metric in ("mR", "mNgR"):
                scores[label] = mean_recall_at_infinity(meta, gt_set, mapping)
            else:
                scores[label] = pair_recall_at_infinity(gt_set, mapping)
            continue
        budget = spec.resolve(len(gt_set))
        mapped = mapped_gc if metric in ("R", "mR", "PR") else mapped_ngc
        matched = {t for t in mapped[:budget] if t is not None}
        if metric in ("R", "ngR"):
            scores[label] = recall_at_k(gt_set, matched)
        elif metric in ("mR", "mNgR"):
            scores[label] = mean_recall_at_k(meta, gt_set, matched)
        else:
            scores[label] = pair_recall_at_k(gt_set, matched)
    return scores


def _empty_prediction(gt_record: ImageRecord) -> ImageRecord:
    return ImageRecord(
        id=gt_record.id, width=None, height=None, instances=(), triplets=(), mask_source=None
    )


def _score_task(task) -> dict[str, float | None]:
    gt_record, pred_record, meta, config = task
    return evaluate_image(gt_record, pred_record, meta, config)


# Task list shared with forked workers, so records need not be pickled per task.
_FORK_TASKS: list | None = None


def _score_forked(index: int) -> dict[str, float | None]:
    assert _FORK_TASKS is not None
    return _score_task(_FORK_TASKS[index])


def _run_parallel(tasks: list, workers: int) -> list[dict[str, float | None]]:
    global _FORK_TASKS
    chunksize = max(1, len(tasks) // (workers * 4))
    if "fork" in multiprocessing.get_all_start_methods():
        context = multiprocessing.get_context("fork")
        _FORK_TASKS = tasks
        try:
            with ProcessPoolExecutor(max_workers=workers, mp_context=context) as pool:
                return list(pool.map(_score_forked, range(len(tasks)), chunksize=chunksize))
        finally:
            _FORK_TASKS = None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_score_task, tasks, chunksize=chunksize))


def pair_records(
    gt_images: Sequence[ImageRecord], pred_images: Sequence[ImageRecord]
) -> list[tuple[ImageRecord, ImageRecord]]:
    """Align predictions to ground truth by image id.

    A prediction without a ground-truth counterpart (or a duplicated id) is an
    error; a ground-truth image without a prediction is evaluated against an
    empty prediction.
    """
    gt_by_id: dict[int, ImageRecord] = {}
    for record in gt_images:
        if record.id in gt_by_id:
            raise ValidationError(f"duplicate ground-truth image id {record.id}")
        gt_by_id[record.id] = record
    pred_by_id: dict[int, ImageRecord] = {}
    for record in pred_images:
        if record.id not in gt_by_id:
            raise ValidationError(f"prediction image {record.id} has no ground-truth counterpart")
        if record.id in pred_by_id:
            raise ValidationError(f"duplicate prediction image id {record.id}")
        pred_by_id[record.id] = record
    return [
        (gt_record, pred_by_id.get(gt_record.id) or _empty_prediction(gt_record))
        for gt_record in gt_by_id.values()
    ]


def evaluate_dataset(
    gt_images: Sequence[ImageRecord],
    pred_images: Sequence[ImageRecord],
    meta: DatasetMeta,
    config: EvalConfig,
    *,
    keep_per_image: bool = False,
) -> MetricReport:
    """Evaluate every configured metric over the dataset.

    Images are scored independently (in parallel when thread_count > 1) and
    averaged in a fixed order, so the result is bit-identical for any worker
    count. Per-metric skip rules determine images_counted.
    """
    pairs = pair_records(gt_images, pred_images)
    tasks = [(gt_record, pred_record, meta, config) for gt_record, pred_record in pairs]

    if config.thread_count == 1 or len(tasks) <= 1:
        rows = [_score_task(task) for task in tasks]
    else:
        rows = _run_parallel(tasks, config.thread_count)

    entries = []
    for label, metric, _ in metric_labels(config):
        contributed: list[tuple[int, float]] = []
        for (gt_record, _), row in zip(pairs, rows):
            value = row[label]
            if value is not None:
                contributed.append((gt_record.id, value))
        if contributed:
            score = sum(value for _, value in contributed) / len(contributed)
        else:
            score = math.nan
        entries.append(
            MetricEntry(
                label=label,
                metric=metric,
                score=score,
                images_counted=len(contributed),
                per_image=dict(contributed) if keep_per_image else None,
            )
        )
    return MetricReport(entries=tuple(entries))
