"""Synthetic dataset builders shared by the test modules."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from sgeval import (
    DatasetMeta,
    ImageRecord,
    Instance,
    Triplet,
    with_mask_refs,
    write_gt_masks,
    write_ground_truth_file,
    write_prediction_masks,
    write_triplet_file,
)

# Listing-style prediction file, comments stripped, one image.
LISTING_JSON = """{
    "version": 1,
    "images": [
        {
            "id": 123,
            "seg_filename": "seg_file.tiff",
            "instances": [
                {
                    "bbox": [1, 22, 333, 44.4],
                    "category": 2
                }
            ],
            "triplets": [
                [0, 3, 34],
                [2, 0, 13]
            ]
        }
    ]
}
"""


def grid_cells(size: int, count: int) -> list[tuple[int, int, int, int]]:
    """Disjoint square cells (r1, c1, r2, c2) tiling a size x size image."""
    per_side = int(np.ceil(np.sqrt(count)))
    step = size // per_side
    cells = []
    for i in range(count):
        r = (i // per_side) * step
        c = (i % per_side) * step
        cells.append((r, c, r + max(step - 2, 1), c + max(step - 2, 1)))
    return cells


def build_image(
    rng: np.random.Generator,
    image_id: int,
    directory: Path,
    *,
    size: int = 32,
    n_instances: int = 4,
    n_gt_triplets: int = 6,
    n_pred_triplets: int = 24,
    n_predicates: int = 5,
    n_classes: int = 3,
    perfect: bool = False,
) -> tuple[ImageRecord, ImageRecord]:
    """One gt/pred record pair with mask files written under ``directory``.

    Ground-truth masks are disjoint cells; predicted masks are the same cells,
    optionally jittered. With ``perfect`` the prediction equals the ground
    truth exactly (instances, masks, and triplets).
    """
    cells = grid_cells(size, n_instances)
    categories = [int(rng.integers(0, n_classes)) for _ in range(n_instances)]
    gt_masks = []
    for r1, c1, r2, c2 in cells:
        mask = np.zeros((size, size), dtype=bool)
        mask[r1:r2, c1:c2] = True
        gt_masks.append(mask)
    boxes = [(float(c1), float(r1), float(c2), float(r2)) for r1, c1, r2, c2 in cells]
    instances = tuple(Instance(category=c, bbox=b) for c, b in zip(categories, boxes))

    def triplets(count, dedupe):
        out = tuple(
            Triplet(
                int(rng.integers(0, n_instances)),
                int(rng.integers(0, n_predicates)),
                int(rng.integers(0, n_instances)),
            )
            for _ in range(count)
        )
        return tuple(dict.fromkeys(out)) if dedupe else out

    def unique_pairs(trips):
        # graph-constrained recall can only reach 1.0 when the ground truth
        # carries one predicate per (sbj, obj) pair
        by_pair = {}
        for trip in trips:
            by_pair.setdefault((trip.sbj, trip.obj), trip)
        return tuple(by_pair.values())

    gt_triplets = triplets(n_gt_triplets, dedupe=True)
    while not gt_triplets:  # every image should contribute to triplet metrics
        gt_triplets = triplets(n_gt_triplets, dedupe=True)
    if perfect:
        gt_triplets = unique_pairs(gt_triplets)

    gt_mask_path = directory / f"gt_{image_id}.png"
    write_gt_masks(gt_masks, gt_mask_path, shape=(size, size))
    gt = with_mask_refs(
        ImageRecord(
            id=image_id,
            width=size,
            height=size,
            instances=instances,
            triplets=gt_triplets,
            mask_source=gt_mask_path,
        )
    )

    if perfect:
        pred_masks = gt_masks
        pred_instances = instances
        pred_triplets = gt_triplets
    else:
        pred_masks = []
        for mask in gt_masks:
            shifted = np.roll(mask, int(rng.integers(0, 3)), axis=1)
            pred_masks.append(shifted)
        pred_instances = instances
        pred_triplets = triplets(n_pred_triplets, dedupe=False)

    pred_mask_path = directory / f"pred_{image_id}.tiff"
    write_prediction_masks(pred_masks, pred_mask_path)
    pred = with_mask_refs(
        ImageRecord(
            id=image_id,
            width=None,
            height=None,
            instances=pred_instances,
            triplets=pred_triplets,
            mask_source=pred_mask_path,
        )
    )
    return gt, pred


def build_dataset(
    directory: Path,
    *,
    seed: int = 0,
    n_images: int = 3,
    perfect: bool = False,
    **image_kwargs,
) -> tuple[Path, Path, DatasetMeta]:
    """Write a complete gt/pred file pair (plus masks) and return their paths."""
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_predicates = image_kwargs.get("n_predicates", 5)
    n_classes = image_kwargs.get("n_classes", 3)
    meta = DatasetMeta(
        predicate_classes=tuple(f"predicate_{i}" for i in range(n_predicates)),
        instance_classes=tuple(f"class_{i}" for i in range(n_classes)),
    )
    gt_records = []
    pred_records = []
    for image_id in range(1, n_images + 1):
        gt, pred = build_image(rng, image_id, directory, perfect=perfect, **image_kwargs)
        gt_records.append(gt)
        pred_records.append(pred)
    gt_path = directory / "gt.json"
    pred_path = directory / "pred.json"
    write_ground_truth_file(meta, gt_records, gt_path)
    write_triplet_file(pred_records, pred_path)
    return gt_path, pred_path, meta
