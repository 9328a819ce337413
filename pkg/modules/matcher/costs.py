"""Matching costs between detection outputs and a scene's ground truth.

All inputs are plain arrays: costs are computed outside the autodiff graph.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from config.schema import LossConfig
from modules.decoder.heads import normalize_points
from modules.scenegen.render import resample_polyline
from modules.scenegen.types import Scene


@dataclass
class DetectionCosts:
    te: np.ndarray
    cl: np.ndarray


def te_cost(
    logits: np.ndarray, boxes: np.ndarray, gt_boxes: np.ndarray, gt_classes: np.ndarray, loss: LossConfig
) -> np.ndarray:
    """``lambda_cls * (1 - p[gt class]) + lambda_l1 * |box - gt|_1`` as ``[N, G]``."""
    n, g = logits.shape[0], gt_boxes.shape[0]
    if g == 0:
        return np.zeros((n, 0))
    prob = expit(logits)[:, np.asarray(gt_classes, dtype=np.int64)]
    return loss.lambda_cls * (1.0 - prob) + loss.lambda_l1 * cdist(boxes, gt_boxes, metric="cityblock")


def gt_lane_points(scene: Scene, points: int, extent: float) -> np.ndarray:
    """GT lanes resampled to ``points`` and normalized to ``[0, 1]``: ``[G, points, 2]``."""
    if not scene.lanes:
        return np.zeros((0, points, 2))
    return normalize_points(np.stack([resample_polyline(lane, points) for lane in scene.lanes]), extent)


def cl_cost(fg_logits: np.ndarray, points: np.ndarray, gt_points: np.ndarray, loss: LossConfig) -> np.ndarray:
    """``lambda_cls * (1 - p_fg) + lambda_l1 * mean ordered L1`` as ``[N, G]`` on normalized points."""
    n, g = points.shape[0], gt_points.shape[0]
    if g == 0:
        return np.zeros((n, 0))
    per = points.shape[1] * points.shape[2]
    l1 = cdist(points.reshape(n, per), gt_points.reshape(g, per), metric="cityblock") / per
    return loss.lambda_cls * (1.0 - expit(fg_logits))[:, None] + loss.lambda_l1 * l1


def detection_costs(
    te_logits: np.ndarray,
    te_boxes: np.ndarray,
    cl_fg: np.ndarray,
    cl_points: np.ndarray,
    scene: Scene,
    loss: LossConfig,
    extent: float,
) -> DetectionCosts:
    gt = gt_lane_points(scene, cl_points.shape[1], extent)
    return DetectionCosts(
        te=te_cost(te_logits, te_boxes, scene.te_boxes(), scene.te_classes(), loss),
        cl=cl_cost(cl_fg, cl_points, gt, loss),
    )
