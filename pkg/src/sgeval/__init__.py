"""Evaluation engine for (panoptic) scene graph generation.

Implements the recall metric family (R@k, mR@k, PR@k, ngR@k, mNgR@k, their
k = infinity variants, Instance Recall, and Predicate Rank) over a
language-neutral interchange format: JSON triplet files, multi-page
compressed TIFF prediction masks, and 16-bit indexed PNG ground-truth masks.
"""

from .errors import (
    ConfigError,
    EvalError,
    FormatError,
    UnsupportedCompressionError,
    ValidationError,
)
from .formats import (
    read_gt_masks,
    read_ground_truth_file,
    read_triplet_file,
    validate_gt_mask_files,
    validate_pred_mask_files,
    write_gt_masks,
    write_ground_truth_file,
    write_report,
    write_triplet_file,
)
from .matching import (
    MatchMapping,
    apply_matching,
    bbox_iou,
    get_mapping,
    instance_recall,
    iou,
    mask_iou,
)
from .metrics import (
    GRAPH_CONSTRAINED,
    NO_GRAPH_CONSTRAINT,
    SelectionRule,
    evaluate_dataset,
    evaluate_image,
    mean_recall_at_infinity,
    mean_recall_at_k,
    metric_labels,
    pair_recall_at_infinity,
    pair_recall_at_k,
    predicate_rank,
    recall_at_infinity,
    recall_at_k,
    select_triplets,
)
from .model import (
    DEFAULT_K_SPECS,
    K_METRICS,
    METRIC_ORDER,
    MODE_BBOX,
    MODE_MASK,
    DatasetMeta,
    EvalConfig,
    ImageRecord,
    Instance,
    KSpec,
    MaskRef,
    MetricEntry,
    MetricReport,
    Triplet,
    Violation,
    validate_dataset,
    validate_id_alignment,
    with_mask_refs,
)
from .tiff import DEFLATE, LZMA, read_prediction_masks, write_prediction_masks

__version__ = "0.1.0"
