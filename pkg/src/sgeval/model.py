"""Domain types for scene graph evaluation datasets.

All types are immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import ConfigError

# Metric identifiers, in report order.
METRIC_ORDER = ("R", "mR", "PR", "ngR", "mNgR", "InstR", "PRank")
# Metrics parameterized by a triplet budget k.
K_METRICS = ("R", "mR", "PR", "ngR", "mNgR")

MODE_MASK = "mask"
MODE_BBOX = "bbox"


@dataclass(frozen=True)
class MaskRef:
    """Reference to the binary mask of one instance inside a mask container file.

    ``index`` is the instance position: TIFF page index for predictions,
    pixel value ``index + 1`` in the indexed PNG for ground truth.
    """

    path: Path
    index: int


@dataclass(frozen=True)
class Instance:
    """One visual object: a class label plus a bounding box and/or mask."""

    category: int
    bbox: tuple[float, float, float, float]
    mask_ref: MaskRef | None = None


@dataclass(frozen=True)
class Triplet:
    """(subject index, predicate index, object index) into an instance list."""

    sbj: int
    predicate: int
    obj: int

    @property
    def pair(self) -> tuple[int, int]:
        return (self.sbj, self.obj)


@dataclass(frozen=True)
class ImageRecord:
    """Per-image bundle of instances and relation triplets.

    For predictions the triplet order is the confidence order (position 0 is
    the most confident); confidence scores themselves are never stored.
    ``width``/``height`` are known for ground truth and ``None`` for
    predictions, whose dimensions are taken from the paired ground truth.
    """

    id: int
    width: int | None
    height: int | None
    instances: tuple[Instance, ...]
    triplets: tuple[Triplet, ...]
    mask_source: Path | None = None


def with_mask_refs(record: ImageRecord) -> ImageRecord:
    """Copy of ``record`` whose instances reference their positions in mask_source.

    Readers attach these references automatically; use this when building
    records by hand so they compare equal to their parsed round-trip.
    """
    if record.mask_source is None:
        return record
    instances = tuple(
        Instance(inst.category, inst.bbox, MaskRef(record.mask_source, idx))
        for idx, inst in enumerate(record.instances)
    )
    return replace(record, instances=instances)


@dataclass(frozen=True)
class DatasetMeta:
    """The predicate and instance class catalogs of a dataset."""

    predicate_classes: tuple[str, ...]
    instance_classes: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "predicate_classes", tuple(self.predicate_classes))
        object.__setattr__(self, "instance_classes", tuple(self.instance_classes))


_K_KINDS = ("absolute", "relative", "infinity")


@dataclass(frozen=True)
class KSpec:
    """Triplet budget: a fixed count, a multiple of the ground-truth count, or unbounded."""

    kind: str
    value: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _K_KINDS:
            raise ConfigError(f"unknown k kind: {self.kind!r}")
        if self.kind == "infinity":
            if self.value is not None:
                raise ConfigError("infinity k carries no value")
        elif not isinstance(self.value, int) or isinstance(self.value, bool) or self.value < 1:
            raise ConfigError(f"{self.kind} k requires a positive integer, got {self.value!r}")

    @classmethod
    def absolute(cls, n: int) -> "KSpec":
        return cls("absolute", n)

    @classmethod
    def relative(cls, factor: int) -> "KSpec":
        return cls("relative", factor)

    @classmethod
    def infinity(cls) -> "KSpec":
        return cls("infinity")

    def resolve(self, gt_count: int) -> int | None:
        """Budget for an image with ``gt_count`` ground-truth triplets; None means unbounded."""
        if self.kind == "absolute":
            return self.value
        if self.kind == "relative":
            return self.value * gt_count
        return None

    @property
    def suffix(self) -> str:
        """Label fragment after the '@': '50', 'x10', or 'inf'."""
        if self.kind == "absolute":
            return str(self.value)
        if self.kind == "relative":
            return f"x{self.value}"
        return "inf"

    @property
    def sort_key(self) -> tuple[int, int]:
        # Report order: absolute ascending, then relative ascending, infinity last.
        if self.kind == "absolute":
            return (0, self.value or 0)
        if self.kind == "relative":
            return (1, self.value or 0)
        return (2, 0)


DEFAULT_K_SPECS = (
    KSpec.absolute(20),
    KSpec.absolute(50),
    KSpec.absolute(100),
    KSpec.relative(1),
    KSpec.relative(10),
)


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation settings shared by the library and the CLI."""

    iou_threshold: float = 0.5
    match_mode: str = MODE_MASK
    k_specs: tuple[KSpec, ...] = DEFAULT_K_SPECS
    metrics: frozenset[str] = frozenset(METRIC_ORDER)
    thread_count: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_specs", tuple(self.k_specs))
        object.__setattr__(self, "metrics", frozenset(self.metrics))
        if not 0.0 < self.iou_threshold < 1.0:
            raise ConfigError(f"iou_threshold must lie in (0, 1), got {self.iou_threshold}")
        if self.match_mode not in (MODE_MASK, MODE_BBOX):
            raise ConfigError(f"unknown match mode: {self.match_mode!r}")
        if self.thread_count < 1:
            raise ConfigError("thread_count must be positive")
        unknown = self.metrics - set(METRIC_ORDER)
        if unknown:
            raise ConfigError(f"unknown metrics: {sorted(unknown)}")


@dataclass(frozen=True)
class MetricEntry:
    """Dataset-level score of one metric at one budget.

    ``score`` is NaN when no image contributed. ``per_image`` maps image id
    to the per-image score for the contributing images only.
    """

    label: str
    metric: str
    score: float
    images_counted: int
    per_image: Mapping[int, float] | None = None


@dataclass(frozen=True)
class MetricReport:
    """Ordered collection of dataset-level metric entries."""

    entries: tuple[MetricEntry, ...] = ()

    def __iter__(self) -> Iterator[MetricEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, label: str) -> MetricEntry:
        for entry in self.entries:
            if entry.label == label:
                return entry
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [entry.label for entry in self.entries]

    def scores(self) -> dict[str, float]:
        return {entry.label: entry.score for entry in self.entries}


@dataclass(frozen=True)
class Violation:
    """One dataset defect found by validation. Violations are data, not exceptions."""

    message: str
    image_id: int | None = None

    def __str__(self) -> str:
        if self.image_id is None:
            return self.message
        return f"image {self.image_id}: {self.message}"


def _validate_record(record: ImageRecord, meta: DatasetMeta | None, out: list[Violation]) -> None:
    n_instances = len(record.instances)
    if record.width is not None and record.width < 1:
        out.append(Violation(f"width {record.width} is not positive", record.id))
    if record.height is not None and record.height < 1:
        out.append(Violation(f"height {record.height} is not positive", record.id))
    for i, inst in enumerate(record.instances):
        x1, y1, x2, y2 = inst.bbox
        if x1 > x2:
            out.append(Violation(f"instance {i}: x1 > x2 in bbox {inst.bbox}", record.id))
        if y1 > y2:
            out.append(Violation(f"instance {i}: y1 > y2 in bbox {inst.bbox}", record.id))
        if inst.category < 0:
            out.append(Violation(f"instance {i}: negative category {inst.category}", record.id))
        elif meta is not None and inst.category >= len(meta.instance_classes):
            out.append(
                Violation(
                    f"instance {i}: category {inst.category} out of range "
                    f"({len(meta.instance_classes)} classes)",
                    record.id,
                )
            )
    for j, t in enumerate(record.triplets):
        if not 0 <= t.sbj < n_instances:
            out.append(
                Violation(f"triplet {j}: sbj index {t.sbj} out of range ({n_instances} instances)", record.id)
            )
        if not 0 <= t.obj < n_instances:
            out.append(
                Violation(f"triplet {j}: obj index {t.obj} out of range ({n_instances} instances)", record.id)
            )
        if t.predicate < 0:
            out.append(Violation(f"triplet {j}: negative predicate {t.predicate}", record.id))
        elif meta is not None and t.predicate >= len(meta.predicate_classes):
            out.append(
                Violation(
                    f"triplet {j}: predicate {t.predicate} out of range "
                    f"({len(meta.predicate_classes)} classes)",
                    record.id,
                )
            )


def validate_dataset(records: Sequence[ImageRecord], meta: DatasetMeta | None) -> list[Violation]:
    """Check in-memory records: index/category ranges, bbox ordering, duplicate ids.

    Pure over its inputs; returns the (possibly empty) violation list and never
    raises. Pass ``meta=None`` to skip the class-catalog upper bounds, e.g. when
    validating a prediction file on its own.
    """
    out: list[Violation] = []
    seen: set[int] = set()
    for record in records:
        if record.id in seen:
            out.append(Violation("duplicate image id", record.id))
        seen.add(record.id)
        _validate_record(record, meta, out)
    return out


def validate_id_alignment(
    gt_records: Sequence[ImageRecord], pred_records: Sequence[ImageRecord]
) -> list[Violation]:
    """Cross-file id check: every prediction id must have a ground-truth counterpart.

    Ground-truth images without a prediction are fine (they evaluate against an
    empty prediction) and are not reported.
    """
    gt_ids = {r.id for r in gt_records}
    out: list[Violation] = []
    for record in pred_records:
        if record.id not in gt_ids:
            out.append(Violation("prediction has no ground-truth counterpart", record.id))
    return out
