"""Independent brute-force implementations used to cross-check the engine.

Everything here recomputes scores from first principles with different code
paths than the package: shapely for box IoU, coordinate sets for mask IoU,
first-occurrence indexing for selection, and per-pair chains for ranks. The
oracle must stay independent of the implementation it checks.
"""

from __future__ import annotations

import numpy as np
import shapely.geometry

from sgeval import DatasetMeta, ImageRecord, Instance, Triplet


def oracle_bbox_iou(a, b) -> float:
    box_a = shapely.geometry.box(*a)
    box_b = shapely.geometry.box(*b)
    union = box_a.union(box_b).area
    if union <= 0:
        return 0.0
    return box_a.intersection(box_b).area / union


def oracle_mask_iou(a, b) -> float:
    set_a = {(r, c) for r, row in enumerate(np.asarray(a).tolist()) for c, v in enumerate(row) if v}
    set_b = {(r, c) for r, row in enumerate(np.asarray(b).tolist()) for c, v in enumerate(row) if v}
    union = set_a | set_b
    if not union:
        return 0.0
    return len(set_a & set_b) / len(union)


def oracle_get_mapping(pred_cats, gt_cats, iou_of, threshold) -> dict[int, int]:
    """Literal transcription of the greedy matching procedure.

    ``iou_of(g, m)`` gives the IoU of gt instance g and predicted instance m.
    Returns the pred -> gt dict.
    """
    assigned: dict[int, int | None] = {x: None for x in range(len(gt_cats))}
    best_iou: dict[int, float] = {}
    for m in range(len(pred_cats)):
        same_class = [g for g in range(len(gt_cats)) if gt_cats[g] == pred_cats[m]]
        if not same_class:
            continue
        # argmax with ties to the lower gt index
        x = max(same_class, key=lambda g: (iou_of(g, m), -g))
        value = iou_of(x, m)
        if value > threshold:
            if assigned[x] is None or value > best_iou[x]:
                assigned[x] = m
                best_iou[x] = value
    return {m: x for x, m in assigned.items() if m is not None}


def oracle_select(ordered, constrained: bool, budget: int | None) -> list[Triplet]:
    """Selection as first-occurrence indexing rather than a scan-and-stop loop."""
    firsts: dict = {}
    for position, t in enumerate(ordered):
        key = (t.sbj, t.obj) if constrained else (t.sbj, t.predicate, t.obj)
        if key not in firsts:
            firsts[key] = (position, t)
    sequence = [t for _, t in sorted(firsts.values())]
    if budget is None:
        return sequence
    return sequence[:budget]


def oracle_matched_set(ordered, constrained, budget, mapping) -> set[Triplet]:
    out = set()
    for t in oracle_select(ordered, constrained, budget):
        if t.sbj in mapping and t.obj in mapping:
            out.add(Triplet(mapping[t.sbj], t.predicate, mapping[t.obj]))
    return out


def oracle_recall(gt: set[Triplet], matched: set[Triplet]) -> float:
    return sum(1 for t in gt if t in matched) / len(gt)


def oracle_mean_recall(gt: set[Triplet], matched: set[Triplet]) -> float:
    predicates = sorted({t.predicate for t in gt})
    scores = []
    for p in predicates:
        gt_p = {t for t in gt if t.predicate == p}
        matched_p = {t for t in matched if t.predicate == p}
        scores.append(len(gt_p & matched_p) / len(gt_p))
    return sum(scores) / len(scores)


def oracle_pair_recall(gt: set[Triplet], matched: set[Triplet]) -> float:
    gt_pairs = {(t.sbj, t.obj) for t in gt}
    matched_pairs = {(t.sbj, t.obj) for t in matched}
    return len(gt_pairs & matched_pairs) / len(gt_pairs)


def _reachable(gt: set[Triplet], mapping: dict[int, int]) -> set[Triplet]:
    matched_gt = set(mapping.values())
    return {t for t in gt if t.sbj in matched_gt and t.obj in matched_gt}


def oracle_recall_inf(gt: set[Triplet], mapping: dict[int, int]) -> float:
    return len(_reachable(gt, mapping)) / len(gt)


def oracle_mean_recall_inf(gt: set[Triplet], mapping: dict[int, int]) -> float:
    return oracle_mean_recall(gt, _reachable(gt, mapping))


def oracle_pair_recall_inf(gt: set[Triplet], mapping: dict[int, int]) -> float:
    return oracle_pair_recall(gt, _reachable(gt, mapping))


def oracle_instance_recall(mapping: dict[int, int], gt_count: int) -> float:
    return len(mapping) / gt_count


def oracle_prank(gt: set[Triplet], ordered, mapping: dict[int, int]) -> float | None:
    """Predicate rank via explicit per-pair chains (dedup after matching)."""
    mapped = []
    for t in ordered:
        if t.sbj in mapping and t.obj in mapping:
            mapped.append(Triplet(mapping[t.sbj], t.predicate, mapping[t.obj]))
    sequence = list(dict.fromkeys(mapped))
    rank: dict[Triplet, int] = {}
    for pair in {(t.sbj, t.obj) for t in sequence}:
        chain = [t for t in sequence if (t.sbj, t.obj) == pair]
        for position, t in enumerate(chain):
            rank[t] = position
    per_predicate = []
    for p in sorted({t.predicate for t in gt}):
        found = [rank[t] for t in gt if t.predicate == p and t in rank]
        if found:
            per_predicate.append(sum(found) / len(found))
    if not per_predicate:
        return None
    return sum(per_predicate) / len(per_predicate)


def oracle_image_scores(case, config) -> dict[str, float | None]:
    """Per-image scores for every configured label, recomputed from scratch."""
    if config.match_mode == "bbox":
        boxes_gt = [inst.bbox for inst in case.gt.instances]
        boxes_pred = [inst.bbox for inst in case.pred.instances]

        def iou_of(g, m):
            return oracle_bbox_iou(boxes_gt[g], boxes_pred[m])

    else:

        def iou_of(g, m):
            return oracle_mask_iou(case.gt_masks[g], case.pred_masks[m])

    mapping = oracle_get_mapping(
        [inst.category for inst in case.pred.instances],
        [inst.category for inst in case.gt.instances],
        iou_of,
        config.iou_threshold,
    )
    gt_set = set(case.gt.triplets)
    ordered = list(case.pred.triplets)
    specs = sorted(dict.fromkeys(config.k_specs), key=lambda s: s.sort_key)

    scores: dict[str, float | None] = {}
    for metric in ("R", "mR", "PR", "ngR", "mNgR"):
        if metric not in config.metrics:
            continue
        for spec in specs:
            label = f"{metric}@{spec.suffix}"
            if not gt_set:
                scores[label] = None
                continue
            if spec.kind == "infinity":
                if metric in ("R", "ngR"):
                    scores[label] = oracle_recall_inf(gt_set, mapping)
                elif metric in ("mR", "mNgR"):
                    scores[label] = oracle_mean_recall_inf(gt_set, mapping)
                else:
                    scores[label] = oracle_pair_recall_inf(gt_set, mapping)
                continue
            budget = spec.value if spec.kind == "absolute" else spec.value * len(gt_set)
            constrained = metric in ("R", "mR", "PR")
            matched = oracle_matched_set(ordered, constrained, budget, mapping)
            if metric in ("R", "ngR"):
                scores[label] = oracle_recall(gt_set, matched)
            elif metric in ("mR", "mNgR"):
                scores[label] = oracle_mean_recall(gt_set, matched)
            else:
                scores[label] = oracle_pair_recall(gt_set, matched)
    if "InstR" in config.metrics:
        n = len(case.gt.instances)
        scores["InstR"] = oracle_instance_recall(mapping, n) if n else None
    if "PRank" in config.metrics:
        scores["PRank"] = oracle_prank(gt_set, ordered, mapping) if gt_set else None
    return scores


class RandomCase:
    """One in-memory image pair plus geometries, for oracle comparisons."""

    def __init__(self, meta, gt, pred, gt_masks, pred_masks):
        self.meta = meta
        self.gt = gt
        self.pred = pred
        self.gt_masks = gt_masks
        self.pred_masks = pred_masks


def _quarter_grid_box(rng: np.random.Generator) -> tuple[float, float, float, float]:
    # Quarter-unit coordinates keep every IoU exactly representable, so the
    # engine and the oracle agree bit for bit even at threshold boundaries.
    x1 = int(rng.integers(0, 48)) / 4
    y1 = int(rng.integers(0, 48)) / 4
    x2 = x1 + int(rng.integers(1, 24)) / 4
    y2 = y1 + int(rng.integers(1, 24)) / 4
    return (x1, y1, x2, y2)


def _rect_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    mask = np.zeros((size, size), dtype=bool)
    r1 = int(rng.integers(0, size - 1))
    c1 = int(rng.integers(0, size - 1))
    r2 = int(rng.integers(r1 + 1, size + 1))
    c2 = int(rng.integers(c1 + 1, size + 1))
    mask[r1:r2, c1:c2] = True
    return mask


def random_case(
    rng: np.random.Generator,
    *,
    mode: str,
    max_instances: int = 6,
    max_triplets: int = 20,
    max_predicates: int = 8,
    mask_size: int = 12,
) -> RandomCase:
    n_predicates = int(rng.integers(1, max_predicates + 1))
    n_classes = int(rng.integers(1, 4))
    meta = DatasetMeta(
        predicate_classes=tuple(f"p{i}" for i in range(n_predicates)),
        instance_classes=tuple(f"c{i}" for i in range(n_classes)),
    )
    n_gt = int(rng.integers(0, max_instances + 1))
    n_out = int(rng.integers(0, max_instances + 1))

    def build(count):
        categories = [int(rng.integers(0, n_classes)) for _ in range(count)]
        boxes = [_quarter_grid_box(rng) for _ in range(count)]
        masks = [_rect_mask(rng, mask_size) for _ in range(count)]
        instances = tuple(Instance(category=c, bbox=b) for c, b in zip(categories, boxes))
        return instances, masks

    gt_instances, gt_masks = build(n_gt)
    pred_instances, pred_masks = build(n_out)

    def random_triplets(count, n_instances):
        if n_instances == 0:
            return ()
        return tuple(
            Triplet(
                int(rng.integers(0, n_instances)),
                int(rng.integers(0, n_predicates)),
                int(rng.integers(0, n_instances)),
            )
            for _ in range(count)
        )

    gt_triplets = tuple(dict.fromkeys(random_triplets(int(rng.integers(0, max_triplets + 1)), n_gt)))
    pred_triplets = random_triplets(int(rng.integers(0, max_triplets + 1)), n_out)

    gt = ImageRecord(
        id=1, width=mask_size, height=mask_size, instances=gt_instances, triplets=gt_triplets
    )
    pred = ImageRecord(
        id=1, width=None, height=None, instances=pred_instances, triplets=pred_triplets
    )
    return RandomCase(meta, gt, pred, gt_masks, pred_masks)
