"""IoU computation and greedy class-aware instance matching."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import MODE_BBOX, MODE_MASK, Instance, Triplet

Box = tuple[float, float, float, float]


def bbox_iou(a: Box, b: Box) -> float:
    """IoU of two xyxy boxes; 0.0 when the union has zero area."""
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union <= 0:
        return 0.0
    return inter / union


def _as_bool(mask) -> np.ndarray:
    mask = np.asarray(mask)
    return mask if mask.dtype == np.bool_ else mask != 0


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of two binary masks of equal shape; 0.0 when both are empty."""
    a = _as_bool(a)
    b = _as_bool(b)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 0.0
    return inter / union


def iou(a, b, mode: str) -> float:
    """IoU of two regions: xyxy boxes in bbox mode, binary arrays in mask mode."""
    if mode == MODE_BBOX:
        return bbox_iou(a, b)
    if mode == MODE_MASK:
        return mask_iou(a, b)
    raise ValueError(f"unknown match mode: {mode!r}")


class MatchMapping:
    """Injective mapping from predicted-instance indices to ground-truth indices.

    Each predicted index appears at most once as a key and each ground-truth
    index at most once as a value; both directions are exposed as read-only
    dicts.
    """

    __slots__ = ("_pred_to_gt", "_gt_to_pred")

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()) -> None:
        pred_to_gt: dict[int, int] = {}
        gt_to_pred: dict[int, int] = {}
        for pred_idx, gt_idx in pairs:
            if pred_idx in pred_to_gt or gt_idx in gt_to_pred:
                raise ValueError("mapping must be injective in both directions")
            pred_to_gt[pred_idx] = gt_idx
            gt_to_pred[gt_idx] = pred_idx
        self._pred_to_gt = pred_to_gt
        self._gt_to_pred = gt_to_pred

    @property
    def pred_to_gt(self) -> Mapping[int, int]:
        return self._pred_to_gt

    @property
    def gt_to_pred(self) -> Mapping[int, int]:
        return self._gt_to_pred

    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(self._pred_to_gt.items())

    def __len__(self) -> int:
        return len(self._pred_to_gt)

    def __contains__(self, pred_idx: int) -> bool:
        return pred_idx in self._pred_to_gt

    def __getitem__(self, pred_idx: int) -> int:
        return self._pred_to_gt[pred_idx]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatchMapping):
            return NotImplemented
        return self._pred_to_gt == other._pred_to_gt

    def __hash__(self) -> int:
        return hash(self.pairs())

    def __repr__(self) -> str:
        return f"MatchMapping({sorted(self._pred_to_gt.items())})"


def get_mapping(
    pred: Sequence[Instance],
    gt: Sequence[Instance],
    threshold: float,
    mode: str,
    *,
    pred_masks: Sequence[np.ndarray] | None = None,
    gt_masks: Sequence[np.ndarray] | None = None,
) -> MatchMapping:
    """Greedily assign predicted instances to ground-truth instances.

    Every predicted instance claims the same-class ground-truth instance with
    the highest IoU, provided that IoU strictly exceeds ``threshold``. A ground
    truth claimed by several predictions keeps only the highest-IoU claimant.
    Ties on the argmax go to the lower ground-truth index; a later claimant
    with exactly the incumbent's IoU does not displace it.

    In mask mode, ``pred_masks``/``gt_masks`` supply the binary masks aligned
    with the instance lists; in bbox mode the instances' boxes are used.
    """
    if mode == MODE_MASK:
        if pred_masks is None or gt_masks is None:
            raise ValueError("mask mode requires pred_masks and gt_masks")
        pred_geom = [_as_bool(m) for m in pred_masks]
        gt_geom = [_as_bool(m) for m in gt_masks]
        pred_area = [int(np.count_nonzero(m)) for m in pred_geom]
        gt_area = [int(np.count_nonzero(m)) for m in gt_geom]

        def pair_iou(g_idx: int, m_idx: int) -> float:
            inter = int(np.count_nonzero(gt_geom[g_idx] & pred_geom[m_idx]))
            union = gt_area[g_idx] + pred_area[m_idx] - inter
            return inter / union if union else 0.0

    elif mode == MODE_BBOX:
        pred_boxes = [inst.bbox for inst in pred]
        gt_boxes = [inst.bbox for inst in gt]

        def pair_iou(g_idx: int, m_idx: int) -> float:
            return bbox_iou(gt_boxes[g_idx], pred_boxes[m_idx])

    else:
        raise ValueError(f"unknown match mode: {mode!r}")

    # gt index -> (iou, pred index) of the current claimant
    claimed: dict[int, tuple[float, int]] = {}
    for m_idx, m in enumerate(pred):
        best_iou = 0.0
        best_gt = -1
        for g_idx, g in enumerate(gt):
            if g.category != m.category:
                continue
            value = pair_iou(g_idx, m_idx)
            if value > best_iou:  # strict: equal IoU keeps the earlier (lower) gt index
                best_iou = value
                best_gt = g_idx
        if best_gt < 0 or best_iou <= threshold:
            continue
        incumbent = claimed.get(best_gt)
        if incumbent is None or best_iou > incumbent[0]:
            claimed[best_gt] = (best_iou, m_idx)

    return MatchMapping((m_idx, g_idx) for g_idx, (_, m_idx) in claimed.items())


def apply_matching(mapping: MatchMapping, selected: Iterable[Triplet]) -> set[Triplet]:
    """Rewrite selected triplets from predicted to ground-truth instance indices.

    Triplets whose subject or object has no match are dropped, so the result
    may be smaller than the selection.
    """
    lookup = mapping.pred_to_gt
    out: set[Triplet] = set()
    for t in selected:
        if t.sbj in lookup and t.obj in lookup:
            out.add(Triplet(lookup[t.sbj], t.predicate, lookup[t.obj]))
    return out


def instance_recall(mapping: MatchMapping, gt_count: int) -> float:
    """Fraction of ground-truth instances with a matched prediction."""
    if gt_count < 1:
        raise ValueError("instance recall is undefined without ground-truth instances")
    return len(mapping) / gt_count
