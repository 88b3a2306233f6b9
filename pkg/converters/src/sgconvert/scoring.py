"""Turn per-predicate confidence scores into the ordered triplet sequence.

The interchange format carries no scores: a model's output is an ordered
triplet list where position encodes confidence. This module performs that
conversion for legacy outputs that store one confidence vector per
subject-object candidate pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class ScoredRelation:
    """One candidate relation: a subject-object pair with per-predicate scores."""

    sbj: int
    obj: int
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not all(math.isfinite(s) for s in self.scores):
            raise ValueError("confidence scores must be finite")


def scores_to_ordered_triplets(
    relations: Sequence[ScoredRelation],
) -> list[tuple[int, int, int]]:
    """Expand every relation into one triplet per predicate, sorted by score.

    Each relation with a length-P score vector yields P (sbj, predicate, obj)
    triplets; the whole pool is sorted by descending score and the scores are
    dropped. Equal scores are ordered by (relation position, predicate index)
    so the conversion is reproducible.
    """
    if relations:
        width = len(relations[0].scores)
        if any(len(rel.scores) != width for rel in relations):
            raise ValueError("all relations must score the same predicate catalog")
    pool = []
    for position, relation in enumerate(relations):
        for predicate, score in enumerate(relation.scores):
            pool.append((-score, position, predicate))
    pool.sort()
    return [
        (relations[position].sbj, predicate, relations[position].obj)
        for _, position, predicate in pool
    ]
