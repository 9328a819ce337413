"""Edge-level topology AP (TOP_ll and TOP_lt) on top of a fixed detection matching.

Only edges with a positive score count as predictions. A predicted edge is a
true positive when both endpoints are matched and the matched GT instances are
related; every GT edge counts toward recall, so edges touching unmatched GT
instances are misses.
"""

from typing import Dict, Tuple

import numpy as np

from modules.metrics.ap import APAccumulator

LANE_MATCH_THRESHOLD = 1.5


def topology_accumulator(
    scores: np.ndarray,
    gt_adj: np.ndarray,
    match_rows: Dict[int, int],
    match_cols: Dict[int, int],
    scene_idx: int = 0,
    exclude_diagonal: bool = False,
) -> APAccumulator:
    """Records for ``scores [A, B]`` against ``gt_adj [GA, GB]``."""
    scores = np.asarray(scores, dtype=float)
    gt_adj = np.asarray(gt_adj)
    n_cols = scores.shape[1] if scores.ndim == 2 else 0
    records = []
    for i, j in zip(*np.nonzero(scores > 0)):
        i, j = int(i), int(j)
        if exclude_diagonal and i == j:
            continue
        gi, gj = match_rows.get(i), match_cols.get(j)
        tp = gi is not None and gj is not None and bool(gt_adj[gi, gj])
        records.append((float(scores[i, j]), (scene_idx, i * n_cols + j), tp))
    n_gt = int(np.count_nonzero(gt_adj))
    if exclude_diagonal and gt_adj.ndim == 2 and gt_adj.shape[0] == gt_adj.shape[1]:
        n_gt -= int(np.count_nonzero(np.diag(gt_adj)))
    return APAccumulator(records=records, n_gt=n_gt)


def top_score(
    pred_adj_scores: np.ndarray,
    gt_adj: np.ndarray,
    detection_match: Tuple[Dict[int, int], Dict[int, int]],
    exclude_diagonal: bool = False,
) -> float:
    """Edge AP for one scene given ``(row_match, col_match)`` prediction -> GT maps."""
    rows, cols = detection_match
    return topology_accumulator(pred_adj_scores, gt_adj, rows, cols, exclude_diagonal=exclude_diagonal).ap()
