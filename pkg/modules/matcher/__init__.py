"""Set matching, detection costs, focal losses and the training criterion."""

from .costs import DetectionCosts, cl_cost, detection_costs, gt_lane_points, te_cost
from .criterion import TERMS, LossBundle, SetCriterion, term_weights
from .hungarian import Assignment, hungarian
from .losses import focal_bce
from .targets import align_topology_targets, fg_targets, te_class_targets

__all__ = [
    "Assignment",
    "DetectionCosts",
    "LossBundle",
    "SetCriterion",
    "TERMS",
    "align_topology_targets",
    "cl_cost",
    "detection_costs",
    "fg_targets",
    "focal_bce",
    "gt_lane_points",
    "hungarian",
    "te_class_targets",
    "te_cost",
    "term_weights",
]
