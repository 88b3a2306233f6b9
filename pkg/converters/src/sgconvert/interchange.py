"""Writers for the interchange files consumed by the evaluation engine.

Kept deliberately independent of the engine package: the file formats are the
contract. Prediction masks go out as multi-page Deflate TIFF, ground-truth
masks as a 16-bit indexed PNG (pixel value v >= 1 marks instance v - 1), and
triplets as version-1 JSON.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image


def write_masks_tiff(masks: Sequence[np.ndarray], path: Path) -> None:
    if len(masks) == 0:
        raise ValueError("a prediction mask file needs at least one page")
    pages = [Image.fromarray(np.where(np.asarray(m) != 0, 255, 0).astype(np.uint8)) for m in masks]
    pages[0].save(
        path,
        format="TIFF",
        compression="tiff_adobe_deflate",
        save_all=True,
        append_images=pages[1:],
    )


def write_masks_png(masks: Sequence[np.ndarray], path: Path, shape: tuple[int, int]) -> None:
    plane = np.zeros(shape, dtype=np.uint16)
    for index, mask in enumerate(masks):
        mask = np.asarray(mask) != 0
        if (plane[mask] != 0).any():
            raise ValueError("ground-truth masks must not overlap")
        plane[mask] = index + 1
    Image.fromarray(plane).save(path, format="PNG")


def image_entry(
    image_id: int,
    instances: Sequence[dict],
    triplets: Sequence[tuple[int, int, int]],
    *,
    seg_filename: str | None = None,
    size: tuple[int, int] | None = None,
) -> dict:
    entry: dict = {"id": image_id}
    if seg_filename is not None:
        entry["seg_filename"] = seg_filename
    if size is not None:
        entry["width"], entry["height"] = size
    entry["instances"] = [
        {"bbox": [float(v) for v in inst["bbox"]], "category": int(inst["category"])}
        for inst in instances
    ]
    entry["triplets"] = [[int(s), int(p), int(o)] for s, p, o in triplets]
    return entry


def write_prediction_file(images: Sequence[dict], path: Path) -> None:
    path.write_text(json.dumps({"version": 1, "images": list(images)}, indent=2) + "\n")


def write_ground_truth_file(
    predicate_classes: Sequence[str],
    instance_classes: Sequence[str],
    images: Sequence[dict],
    path: Path,
) -> None:
    doc = {
        "version": 1,
        "predicate_classes": list(predicate_classes),
        "instance_classes": list(instance_classes),
        "images": list(images),
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
