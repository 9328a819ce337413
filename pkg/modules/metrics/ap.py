"""modules.metrics.ap

Ranked-record bookkeeping and 11-point interpolated average precision.

A record is ``(score, key, is_tp)`` where ``key`` is ``(scene_index,
slot_index)``. Records are ranked by descending score, ties by ascending key,
so the ranking does not depend on the order records were collected in and
merging accumulators is associative.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

Record = Tuple[float, Tuple[int, int], bool]

RECALL_LEVELS = np.linspace(0.0, 1.0, 11)


def rank_records(records: Sequence[Record]) -> List[Record]:
    return sorted(records, key=lambda r: (-r[0], r[1]))


def precision_recall(records: Sequence[Record], n_gt: int) -> Tuple[np.ndarray, np.ndarray]:
    ranked = rank_records(records)
    hits = np.array([1.0 if r[2] else 0.0 for r in ranked])
    tp = np.cumsum(hits)
    fp = np.cumsum(1.0 - hits)
    recall = tp / max(n_gt, 1)
    precision = tp / np.maximum(tp + fp, 1.0)
    return precision, recall


def interpolated_ap(records: Sequence[Record], n_gt: int) -> float:
    """Mean over recall levels 0, 0.1, ..., 1 of the best precision at or above each level.

    Zero when there is nothing to recall.
    """
    if n_gt <= 0 or not records:
        return 0.0
    precision, recall = precision_recall(records, n_gt)
    total = 0.0
    for level in RECALL_LEVELS:
        mask = recall >= level - 1e-12
        total += float(precision[mask].max()) if mask.any() else 0.0
    return total / len(RECALL_LEVELS)


@dataclass
class APAccumulator:
    records: List[Record] = field(default_factory=list)
    n_gt: int = 0

    def merge(self, other: "APAccumulator") -> "APAccumulator":
        return APAccumulator(records=self.records + other.records, n_gt=self.n_gt + other.n_gt)

    def ap(self) -> float:
        return interpolated_ap(self.records, self.n_gt)
