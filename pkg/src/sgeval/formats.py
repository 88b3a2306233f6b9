"""Readers and writers for the interchange formats.

Triplet files are UTF-8 JSON (schema version 1). Prediction masks come as
multi-page compressed TIFF, ground-truth masks as a single 16-bit indexed
grayscale PNG where pixel value v >= 1 assigns the pixel to instance v - 1.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import ConfigError, FormatError
from .model import (
    DatasetMeta,
    ImageRecord,
    Instance,
    MaskRef,
    MetricReport,
    Triplet,
    Violation,
)
from .tiff import read_prediction_masks

REPORT_CSV_HEADER = ("metric", "score", "images_counted")


def _fail(path: Path, message: str) -> FormatError:
    return FormatError(f"{path}: {message}")


def _as_index(value: object, what: str, path: Path) -> int:
    # JSON booleans are ints in Python; they are not valid indices.
    if not isinstance(value, int) or isinstance(value, bool):
        raise _fail(path, f"{what} must be an integer, got {value!r}")
    return value


def _as_number(value: object, what: str, path: Path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise _fail(path, f"{what} must be finite, got {value!r}")
    return float(value)


def _load_json(path: Path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError, RecursionError) as exc:
        raise _fail(path, f"invalid JSON: {exc}") from exc


def _parse_instance(obj: object, where: str, path: Path, mask_ref: MaskRef | None) -> Instance:
    if not isinstance(obj, dict):
        raise _fail(path, f"{where} must be an object")
    if "bbox" not in obj or "category" not in obj:
        raise _fail(path, f"{where} needs 'bbox' and 'category'")
    bbox = obj["bbox"]
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise _fail(path, f"{where}: bbox must be a 4-element list")
    coords = tuple(_as_number(v, f"{where}: bbox value", path) for v in bbox)
    category = _as_index(obj["category"], f"{where}: category", path)
    return Instance(category=category, bbox=coords, mask_ref=mask_ref)


def _parse_triplet(obj: object, where: str, path: Path) -> Triplet:
    if not isinstance(obj, list) or len(obj) != 3:
        raise _fail(path, f"{where} must be a [sbj, predicate, obj] list")
    sbj, predicate, tobj = (_as_index(v, f"{where} element", path) for v in obj)
    return Triplet(sbj=sbj, predicate=predicate, obj=tobj)


def _parse_images(doc: dict, path: Path, *, ground_truth: bool) -> list[ImageRecord]:
    images = doc.get("images")
    if not isinstance(images, list):
        raise _fail(path, "'images' must be a list")
    records = []
    for n, img in enumerate(images):
        where = f"images[{n}]"
        if not isinstance(img, dict):
            raise _fail(path, f"{where} must be an object")
        if "id" not in img:
            raise _fail(path, f"{where} needs an 'id'")
        image_id = _as_index(img["id"], f"{where}: id", path)

        mask_source = None
        seg = img.get("seg_filename")
        if seg is not None:
            if not isinstance(seg, str) or not seg:
                raise _fail(path, f"{where}: seg_filename must be a non-empty string")
            mask_source = path.parent / seg

        width = height = None
        if ground_truth:
            for key in ("width", "height"):
                if key not in img:
                    raise _fail(path, f"{where} needs '{key}'")
            width = _as_index(img["width"], f"{where}: width", path)
            height = _as_index(img["height"], f"{where}: height", path)

        raw_instances = img.get("instances", [])
        if not isinstance(raw_instances, list):
            raise _fail(path, f"{where}: instances must be a list")
        instances = tuple(
            _parse_instance(
                inst,
                f"{where}: instances[{i}]",
                path,
                MaskRef(mask_source, i) if mask_source is not None else None,
            )
            for i, inst in enumerate(raw_instances)
        )

        raw_triplets = img.get("triplets", [])
        if not isinstance(raw_triplets, list):
            raise _fail(path, f"{where}: triplets must be a list")
        triplets = [_parse_triplet(t, f"{where}: triplets[{j}]", path) for j, t in enumerate(raw_triplets)]
        if ground_truth:
            # Ground-truth triplets are a set; drop duplicates, keep first occurrence.
            triplets = list(dict.fromkeys(triplets))

        records.append(
            ImageRecord(
                id=image_id,
                width=width,
                height=height,
                instances=instances,
                triplets=tuple(triplets),
                mask_source=mask_source,
            )
        )
    return records


def _check_version(doc: object, path: Path) -> dict:
    if not isinstance(doc, dict):
        raise _fail(path, "top level must be a JSON object")
    version = doc.get("version")
    if version != 1 or isinstance(version, bool):
        raise _fail(path, f"unsupported file version {version!r} (expected 1)")
    return doc


def read_triplet_file(path: str | Path) -> list[ImageRecord]:
    """Parse a prediction triplet file (schema version 1).

    Triplet order is preserved: it encodes descending confidence. Referenced
    mask files are resolved relative to the JSON file's directory. Index
    ranges are not checked here; that is validation, not parsing.
    """
    path = Path(path)
    doc = _check_version(_load_json(path), path)
    return _parse_images(doc, path, ground_truth=False)


def read_ground_truth_file(path: str | Path) -> tuple[DatasetMeta, list[ImageRecord]]:
    """Parse a ground-truth file: class catalogs plus per-image records."""
    path = Path(path)
    doc = _check_version(_load_json(path), path)
    for key in ("predicate_classes", "instance_classes"):
        names = doc.get(key)
        if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
            raise _fail(path, f"'{key}' must be a non-empty list of strings")
        if len(set(names)) != len(names):
            raise _fail(path, f"'{key}' contains duplicate names")
    meta = DatasetMeta(
        predicate_classes=tuple(doc["predicate_classes"]),
        instance_classes=tuple(doc["instance_classes"]),
    )
    return meta, _parse_images(doc, path, ground_truth=True)


def _record_to_json(record: ImageRecord, base_dir: Path, *, ground_truth: bool) -> dict:
    obj: dict = {"id": record.id}
    if record.mask_source is not None:
        obj["seg_filename"] = os.path.relpath(record.mask_source, base_dir)
    if ground_truth:
        obj["width"] = record.width
        obj["height"] = record.height
    obj["instances"] = [
        {"bbox": list(inst.bbox), "category": inst.category} for inst in record.instances
    ]
    obj["triplets"] = [[t.sbj, t.predicate, t.obj] for t in record.triplets]
    return obj


def write_triplet_file(records: Sequence[ImageRecord], path: str | Path) -> None:
    """Serialize prediction records back to the version-1 schema."""
    path = Path(path)
    doc = {
        "version": 1,
        "images": [_record_to_json(r, path.parent, ground_truth=False) for r in records],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_ground_truth_file(
    meta: DatasetMeta, records: Sequence[ImageRecord], path: str | Path
) -> None:
    """Serialize a ground-truth file: class catalogs plus per-image records."""
    path = Path(path)
    doc = {
        "version": 1,
        "predicate_classes": list(meta.predicate_classes),
        "instance_classes": list(meta.instance_classes),
        "images": [_record_to_json(r, path.parent, ground_truth=True) for r in records],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_gt_masks(path: str | Path, instance_count: int) -> list[np.ndarray]:
    """Decode a 16-bit indexed PNG into one boolean mask per instance.

    Pixel value 0 is background; value v >= 1 assigns the pixel to instance
    v - 1. Values beyond ``instance_count`` are an error.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            mode = im.mode
            if not mode.startswith("I;16"):
                raise _fail(path, f"ground-truth masks must be 16-bit grayscale PNG, got mode {mode!r}")
            plane = np.asarray(im, dtype=np.uint16)
    except FormatError:
        raise
    except Exception as exc:  # Pillow raises a zoo of types on corrupt files
        raise _fail(path, f"invalid PNG: {exc}") from exc
    top = int(plane.max(initial=0))
    if top > instance_count:
        raise _fail(path, f"mask value {top} exceeds instance count {instance_count}")
    return [plane == i + 1 for i in range(instance_count)]


def write_gt_masks(
    masks: Sequence[np.ndarray], path: str | Path, *, shape: tuple[int, int] | None = None
) -> None:
    """Compose non-overlapping binary masks into one indexed plane and save as PNG.

    ``shape`` is required only when ``masks`` is empty (the PNG still needs
    the image dimensions).
    """
    if len(masks) >= 0xFFFF:
        raise ValueError("too many instances for a 16-bit indexed mask")
    if len(masks) == 0:
        if shape is None:
            raise ValueError("shape is required to write an empty mask plane")
        plane = np.zeros(shape, dtype=np.uint16)
    else:
        arrays = [np.asarray(m) != 0 for m in masks]
        base = arrays[0].shape
        if any(a.shape != base for a in arrays):
            raise ValueError("ground-truth masks must share one shape")
        coverage = np.zeros(base, dtype=np.uint16)
        for a in arrays:
            coverage += a
        if coverage.max(initial=0) > 1:
            raise ValueError("ground-truth masks must not overlap")
        plane = np.zeros(base, dtype=np.uint16)
        for i, a in enumerate(arrays):
            plane[a] = i + 1
    Image.fromarray(plane).save(Path(path), format="PNG")


def _round4(score: float) -> float | None:
    if math.isnan(score):
        return None
    return round(score, 4)


def write_report(report: MetricReport, path: str | Path, fmt: str = "json") -> None:
    """Serialize a metric report as JSON or CSV, scores to 4 decimal places."""
    if not report.entries:
        raise ConfigError("nothing to report")
    path = Path(path)
    if fmt == "json":
        doc: dict = {}
        for entry in report.entries:
            item: dict = {"score": _round4(entry.score), "images_counted": entry.images_counted}
            if entry.per_image is not None:
                item["per_image"] = {
                    str(image_id): _round4(value) for image_id, value in entry.per_image.items()
                }
            doc[entry.label] = item
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_CSV_HEADER)
            for entry in report.entries:
                score = "" if math.isnan(entry.score) else f"{entry.score:.4f}"
                writer.writerow([entry.label, score, entry.images_counted])
    else:
        raise ConfigError(f"unknown report format: {fmt!r}")


def validate_gt_mask_files(records: Sequence[ImageRecord]) -> list[Violation]:
    """Mask-mode file checks for ground truth: presence, readability, dimensions."""
    out = []
    for record in records:
        if not record.instances:
            continue
        if record.mask_source is None:
            out.append(Violation("no seg_filename but match mode is mask", record.id))
            continue
        if not record.mask_source.is_file():
            out.append(Violation(f"mask file not found: {record.mask_source}", record.id))
            continue
        try:
            masks = read_gt_masks(record.mask_source, len(record.instances))
        except FormatError as exc:
            out.append(Violation(str(exc), record.id))
            continue
        expected = (record.height, record.width)
        if masks and masks[0].shape != expected:
            out.append(
                Violation(f"mask dimensions {masks[0].shape} do not match image {expected}", record.id)
            )
    return out


def validate_pred_mask_files(
    pred_records: Sequence[ImageRecord], gt_by_id: dict[int, ImageRecord] | None = None
) -> list[Violation]:
    """Mask-mode file checks for predictions: presence, page count, dimensions."""
    out = []
    for record in pred_records:
        if not record.instances:
            continue
        if record.mask_source is None:
            out.append(Violation("no seg_filename but match mode is mask", record.id))
            continue
        if not record.mask_source.is_file():
            out.append(Violation(f"mask file not found: {record.mask_source}", record.id))
            continue
        try:
            masks = read_prediction_masks(record.mask_source)
        except FormatError as exc:
            out.append(Violation(str(exc), record.id))
            continue
        if len(masks) != len(record.instances):
            out.append(
                Violation(
                    f"mask file has {len(masks)} pages but the image lists "
                    f"{len(record.instances)} instances",
                    record.id,
                )
            )
            continue
        gt = gt_by_id.get(record.id) if gt_by_id else None
        if gt is not None and gt.width is not None:
            expected = (gt.height, gt.width)
            bad = [i for i, m in enumerate(masks) if m.shape != expected]
            if bad:
                out.append(
                    Violation(
                        f"mask page {bad[0]} has shape {masks[bad[0]].shape}, image is {expected}",
                        record.id,
                    )
                )
    return out
