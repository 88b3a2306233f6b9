"""Deterministic synthetic datasets with known metric values.

Profiles:
  perfect    prediction equals the ground truth exactly; every recall metric
             evaluates to 1.0, Predicate Rank to 0.0.
  drop-half  prediction keeps the instances but only the first half of each
             image's ground-truth triplets; R@inf stays 1.0 while R@x1 can
             reach at most 0.5.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .interchange import (
    image_entry,
    write_ground_truth_file,
    write_masks_png,
    write_masks_tiff,
    write_prediction_file,
)

PROFILES = ("perfect", "drop-half")

_IMAGE_SIZE = 64
_N_INSTANCE_CLASSES = 3


def _cell_masks(count: int, size: int) -> list[np.ndarray]:
    per_side = int(np.ceil(np.sqrt(count)))
    step = size // per_side
    masks = []
    for index in range(count):
        row = (index // per_side) * step
        col = (index % per_side) * step
        mask = np.zeros((size, size), dtype=bool)
        mask[row : row + max(step - 2, 1), col : col + max(step - 2, 1)] = True
        masks.append(mask)
    return masks


def _unique_pair_triplets(rng, n_instances: int, n_predicates: int, count: int):
    by_pair: dict[tuple[int, int], tuple[int, int, int]] = {}
    for _ in range(count * 3):
        if len(by_pair) >= count:
            break
        sbj = int(rng.integers(0, n_instances))
        obj = int(rng.integers(0, n_instances))
        pair = (sbj, obj)
        if pair not in by_pair:
            by_pair[pair] = (sbj, int(rng.integers(0, n_predicates)), obj)
    return list(by_pair.values())


def generate_fixture(
    seed: int,
    n_images: int,
    n_instances: int,
    n_predicates: int,
    profile: str,
    out_dir: str | Path,
) -> tuple[Path, Path]:
    """Write a conforming gt/pred file pair (plus masks) under ``out_dir``.

    Output is a pure function of the arguments: the same seed yields
    byte-identical files. Returns (gt_path, pred_path).
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    if min(n_images, n_instances, n_predicates) < 1:
        raise ValueError("n_images, n_instances and n_predicates must be positive")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    gt_images = []
    pred_images = []
    for image_id in range(1, n_images + 1):
        masks = _cell_masks(n_instances, _IMAGE_SIZE)
        instances = []
        for mask in masks:
            rows, cols = np.nonzero(mask)
            instances.append(
                {
                    "bbox": [
                        float(cols.min()),
                        float(rows.min()),
                        float(cols.max() + 1),
                        float(rows.max() + 1),
                    ],
                    "category": int(rng.integers(0, _N_INSTANCE_CLASSES)),
                }
            )
        # at least two triplets so that drop-half actually drops something
        wanted = max(2, min(n_instances * 2, 8))
        triplets = _unique_pair_triplets(rng, n_instances, n_predicates, wanted)

        gt_png = f"gt_{image_id}.png"
        pred_tiff = f"pred_{image_id}.tiff"
        write_masks_png(masks, out_dir / gt_png, (_IMAGE_SIZE, _IMAGE_SIZE))
        write_masks_tiff(masks, out_dir / pred_tiff)

        gt_images.append(
            image_entry(
                image_id,
                instances,
                triplets,
                seg_filename=gt_png,
                size=(_IMAGE_SIZE, _IMAGE_SIZE),
            )
        )
        kept = triplets if profile == "perfect" else triplets[: len(triplets) // 2]
        pred_images.append(image_entry(image_id, instances, kept, seg_filename=pred_tiff))

    gt_path = out_dir / "gt.json"
    pred_path = out_dir / "pred.json"
    write_ground_truth_file(
        [f"predicate_{i}" for i in range(n_predicates)],
        [f"class_{i}" for i in range(_N_INSTANCE_CLASSES)],
        gt_images,
        gt_path,
    )
    write_prediction_file(pred_images, pred_path)
    return gt_path, pred_path
