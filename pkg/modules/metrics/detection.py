"""modules.metrics.detection

Lane (DET_l) and traffic-element (DET_t) detection AP.

Matching is greedy in score order: each prediction takes the best still
unmatched ground truth that passes the threshold (nearest Fréchet distance for
lanes, highest IoU for boxes; ties by lower GT index).
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from modules.metrics.ap import APAccumulator
from modules.metrics.frechet import frechet_matrix

LANE_THRESHOLDS = (1.0, 2.0, 3.0)
IOU_THRESHOLD = 0.75


def score_order(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score, lower index first among equal scores."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def greedy_match(scores: np.ndarray, cost: np.ndarray, valid: np.ndarray) -> Dict[int, int]:
    """Map prediction index -> GT index; lower ``cost`` is better among ``valid`` pairs."""
    taken = np.zeros(cost.shape[1], dtype=bool)
    match: Dict[int, int] = {}
    for i in score_order(scores):
        ok = valid[i] & ~taken
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        g = int(cand[np.argmin(cost[i, cand])])
        taken[g] = True
        match[int(i)] = g
    return match


def _records(
    scores: np.ndarray, match: Dict[int, int], n_gt: int, scene_idx: int, slots: Optional[Sequence[int]] = None
) -> APAccumulator:
    slots = range(len(scores)) if slots is None else slots
    return APAccumulator(
        records=[(float(scores[i]), (scene_idx, int(i)), int(i) in match) for i in slots],
        n_gt=n_gt,
    )


# --- lanes ---


def lane_match(dist: np.ndarray, scores: np.ndarray, tau: float) -> Dict[int, int]:
    return greedy_match(scores, dist, dist < tau)


def lane_accumulators(
    dist: np.ndarray, scores: np.ndarray, thresholds: Sequence[float] = LANE_THRESHOLDS, scene_idx: int = 0
) -> Dict[float, APAccumulator]:
    """Per-threshold records from a precomputed Fréchet matrix ``[N, G]``."""
    n_gt = dist.shape[1]
    return {float(t): _records(scores, lane_match(dist, scores, t), n_gt, scene_idx) for t in thresholds}


def det_l(pred_lanes, gt_lanes, scores, thresholds: Sequence[float] = LANE_THRESHOLDS) -> float:
    """Lane AP averaged over Fréchet thresholds (meters)."""
    scores = np.asarray(scores, dtype=float)
    dist = frechet_matrix(pred_lanes, gt_lanes)
    accs = lane_accumulators(dist, scores, thresholds)
    return float(np.mean([a.ap() for a in accs.values()]))


# --- traffic elements ---


def box_corners(boxes: np.ndarray) -> np.ndarray:
    """``(cx, cy, w, h)`` -> ``(x0, y0, x1, y1)``."""
    b = np.asarray(boxes, dtype=float).reshape(-1, 4)
    half = b[:, 2:] / 2.0
    return np.concatenate([b[:, :2] - half, b[:, :2] + half], axis=1)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU between center-size boxes, ``[len(a), len(b)]``."""
    ca, cb = box_corners(a), box_corners(b)
    lo = np.maximum(ca[:, None, :2], cb[None, :, :2])
    hi = np.minimum(ca[:, None, 2:], cb[None, :, 2:])
    inter = np.prod(np.clip(hi - lo, 0.0, None), axis=-1)
    area_a = np.prod(ca[:, 2:] - ca[:, :2], axis=-1)
    area_b = np.prod(cb[:, 2:] - cb[:, :2], axis=-1)
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def te_predicted_classes(class_scores: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Argmax attribute and its score per prediction."""
    class_scores = np.asarray(class_scores, dtype=float)
    if class_scores.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    cls = class_scores.argmax(axis=1)
    return cls, class_scores[np.arange(len(cls)), cls]


def te_match(
    pred_boxes: np.ndarray, scores: np.ndarray, gt_boxes: np.ndarray, iou_threshold: float = IOU_THRESHOLD
) -> Dict[int, int]:
    """Class-agnostic greedy box matching."""
    iou = iou_matrix(pred_boxes, gt_boxes)
    return greedy_match(scores, -iou, iou >= iou_threshold)


def te_accumulators(
    pred_boxes: np.ndarray,
    class_scores: np.ndarray,
    gt_boxes: np.ndarray,
    gt_classes: np.ndarray,
    iou_threshold: float = IOU_THRESHOLD,
    scene_idx: int = 0,
) -> Dict[int, APAccumulator]:
    """Per-attribute records; keys cover predicted and GT attributes."""
    cls, score = te_predicted_classes(class_scores)
    gt_classes = np.asarray(gt_classes, dtype=np.int64)
    pred_boxes = np.asarray(pred_boxes, dtype=float).reshape(-1, 4)
    gt_boxes = np.asarray(gt_boxes, dtype=float).reshape(-1, 4)
    out: Dict[int, APAccumulator] = {}
    for c in sorted(set(cls.tolist()) | set(gt_classes.tolist())):
        p_idx = np.flatnonzero(cls == c)
        g_idx = np.flatnonzero(gt_classes == c)
        local = te_match(pred_boxes[p_idx], score[p_idx], gt_boxes[g_idx], iou_threshold)
        match = {int(p_idx[i]): int(g_idx[g]) for i, g in local.items()}
        out[int(c)] = _records(score, match, len(g_idx), scene_idx, slots=p_idx)
    return out


def mean_attribute_ap(accs: Dict[int, APAccumulator]) -> float:
    """Average AP over attributes that occur in the ground truth."""
    present = [a.ap() for _, a in sorted(accs.items()) if a.n_gt > 0]
    return float(np.mean(present)) if present else 0.0


def det_t(pred_boxes, class_scores, gt_boxes, gt_classes, iou_threshold: float = IOU_THRESHOLD) -> float:
    return mean_attribute_ap(te_accumulators(pred_boxes, class_scores, gt_boxes, gt_classes, iou_threshold))
