"""Adapters from legacy pickled model outputs to the interchange format.

Legacy scene graph codebases serialize their outputs with pickle, each with
its own in-memory layout. The ``generic`` layout below is fully implemented;
the per-repository adapters document the fields those codebases emit and can
be filled in by whoever has such output files at hand.

Pickle executes code on load: only convert files you produced yourself.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

from .scoring import ScoredRelation, scores_to_ordered_triplets

GENERIC_LAYOUT = """\
{
  "images": [
    {
      "id": int,
      "instances": [{"bbox": [x1, y1, x2, y2], "category": int}, ...],
      "masks": optional (n, h, w) array or list of (h, w) binary arrays,
      "relations": [[sbj_index, obj_index], ...],
      "scores": [[per-predicate confidences], ...]   # one row per relation
    }, ...
  ]
}"""


class ConvertedImage:
    """Converter-side bundle: instances, optional masks, ordered triplets."""

    def __init__(self, image_id, instances, masks, triplets):
        self.id = image_id
        self.instances = instances
        self.masks = masks
        self.triplets = triplets


def load_generic(path: str | Path) -> list[ConvertedImage]:
    """Read a pickle in the documented generic layout (see GENERIC_LAYOUT)."""
    with open(path, "rb") as fh:
        doc = pickle.load(fh)
    if not isinstance(doc, dict) or "images" not in doc:
        raise ValueError(f"expected a dict with an 'images' list; layout:\n{GENERIC_LAYOUT}")
    out = []
    for image in doc["images"]:
        relations = image.get("relations", [])
        scores = image.get("scores", [])
        if len(relations) != len(scores):
            raise ValueError(f"image {image.get('id')}: relations and scores differ in length")
        scored = [
            ScoredRelation(sbj=int(sbj), obj=int(obj), scores=tuple(row))
            for (sbj, obj), row in zip(relations, scores)
        ]
        masks = image.get("masks")
        if masks is not None:
            masks = [np.asarray(m) != 0 for m in masks]
            if len(masks) != len(image["instances"]):
                raise ValueError(f"image {image.get('id')}: one mask per instance required")
        out.append(
            ConvertedImage(
                image_id=int(image["id"]),
                instances=list(image["instances"]),
                masks=masks,
                triplets=scores_to_ordered_triplets(scored),
            )
        )
    return out


def _stub(repo: str, expected: str):
    raise NotImplementedError(
        f"the {repo} adapter is a skeleton: its output pickle is expected to carry "
        f"{expected}. Reshape it into the generic layout (--layout generic):\n{GENERIC_LAYOUT}"
    )


def load_imp(path):
    _stub("IMP", "per-image 'refine_bboxes', 'labels', 'rel_pair_idxes' and 'rel_scores' arrays")


def load_motifs(path):
    _stub("Neural-Motifs", "per-image 'rel_inds' pair indices with 'rel_scores' predicate matrices")


def load_hilo(path):
    _stub("HiLo", "panoptic masks plus merged high/low-frequency 'rel_scores' distributions")


def load_pairnet(path):
    _stub("Pair-Net", "pair-proposal indices with per-pair predicate score vectors and masks")


LAYOUTS = {
    "generic": load_generic,
    "imp": load_imp,
    "motifs": load_motifs,
    "hilo": load_hilo,
    "pairnet": load_pairnet,
}
