"""modules.matcher.criterion

Training objective: Hungarian matching of TE and CL queries to the scene, then
focal classification, L1 regression and focal topology terms on the matched
slots, plus the optional BEV distillation term.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from config.schema import LossConfig
from core.functional import l1_loss
from core.tensor import Tensor
from modules.matcher.costs import detection_costs, gt_lane_points
from modules.matcher.hungarian import Assignment, hungarian
from modules.matcher.losses import focal_bce
from modules.matcher.targets import align_topology_targets, fg_targets, te_class_targets
from modules.model.outputs import ModelOutput
from modules.scenegen.types import Scene

TERMS = ("cls_te", "box_te", "cls_cl", "reg_cl", "top_tecl", "top_clcl", "distill")


@dataclass
class LossBundle:
    cls_te: Tensor
    box_te: Tensor
    cls_cl: Tensor
    reg_cl: Tensor
    top_tecl: Tensor
    top_clcl: Tensor
    distill: Tensor
    total: Tensor
    weights: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, float]:
        out = {name: getattr(self, name).item() for name in TERMS}
        out["total"] = self.total.item()
        return out


def term_weights(loss: LossConfig) -> Dict[str, float]:
    return {
        "cls_te": loss.lambda_cls,
        "box_te": loss.lambda_l1,
        "cls_cl": loss.lambda_cls,
        "reg_cl": loss.lambda_l1,
        "top_tecl": loss.lambda_top,
        "top_clcl": loss.lambda_top,
        "distill": loss.lambda_bev,
    }


def _zero(like: Tensor) -> Tensor:
    return Tensor(0.0, dtype=like.dtype)


class SetCriterion:
    """Callable ``(output, scene, distill=None) -> LossBundle``.

    Terms with weight zero are left out of ``total`` entirely, so no gradient
    path is recorded for them.
    """

    def __init__(self, loss: LossConfig, extent: float, c_te: int):
        self.loss = loss
        self.extent = extent
        self.c_te = c_te
        self.weights = term_weights(loss)

    def match(self, out: ModelOutput, scene: Scene) -> Tuple[Assignment, Assignment]:
        costs = detection_costs(
            out.te_logits.numpy(),
            out.te_boxes.numpy(),
            out.cl_fg.numpy(),
            out.cl_points.numpy(),
            scene,
            self.loss,
            self.extent,
        )
        return hungarian(costs.te), hungarian(costs.cl)

    def __call__(self, out: ModelOutput, scene: Scene, distill: Optional[Tensor] = None) -> LossBundle:
        a_te, a_cl = self.match(out, scene)
        alpha, gamma = self.loss.focal_alpha, self.loss.focal_gamma
        n_te, n_cl = out.n_te, out.n_cl

        cls_te = focal_bce(out.te_logits, te_class_targets(a_te, scene.te_classes(), n_te, self.c_te), alpha, gamma)
        cls_cl = focal_bce(out.cl_fg, fg_targets(a_cl, n_cl), alpha, gamma)

        if a_te.pairs:
            pred_idx = np.array([p for p, _ in a_te.pairs])
            gt_idx = np.array([g for _, g in a_te.pairs])
            box_te = l1_loss(out.te_boxes[pred_idx], Tensor(scene.te_boxes()[gt_idx], dtype=out.te_boxes.dtype))
        else:
            box_te = _zero(out.te_boxes)

        if a_cl.pairs:
            pred_idx = np.array([p for p, _ in a_cl.pairs])
            gt_idx = np.array([g for _, g in a_cl.pairs])
            gt = gt_lane_points(scene, out.cl_points.shape[1], self.extent)[gt_idx]
            reg_cl = l1_loss(out.cl_points[pred_idx], Tensor(gt, dtype=out.cl_points.dtype))
        else:
            reg_cl = _zero(out.cl_points)

        tgt_tecl, tgt_clcl = align_topology_targets(a_te, a_cl, scene, n_te, n_cl)
        top_tecl = focal_bce(out.topology.tecl, tgt_tecl, alpha, gamma)
        top_clcl = focal_bce(out.topology.clcl, tgt_clcl, alpha, gamma)

        terms = {
            "cls_te": cls_te,
            "box_te": box_te,
            "cls_cl": cls_cl,
            "reg_cl": reg_cl,
            "top_tecl": top_tecl,
            "top_clcl": top_clcl,
            "distill": distill if distill is not None else _zero(out.f_bev),
        }
        total = None
        for name in TERMS:
            w = self.weights[name]
            if w == 0.0 or (name == "distill" and distill is None):
                continue
            part = terms[name] * w
            total = part if total is None else total + part
        if total is None:
            total = _zero(out.f_bev)
        return LossBundle(total=total, weights=dict(self.weights), **terms)
