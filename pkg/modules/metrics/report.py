"""modules.metrics.report

Per-scene evaluation records, their associative reduction and the final
`MetricsReport`.
"""

from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from modules.metrics.ap import APAccumulator
from modules.metrics.detection import (
    IOU_THRESHOLD,
    LANE_THRESHOLDS,
    lane_accumulators,
    lane_match,
    mean_attribute_ap,
    te_accumulators,
    te_match,
    te_predicted_classes,
)
from modules.metrics.frechet import frechet_matrix
from modules.metrics.ols import ols
from modules.metrics.topology import LANE_MATCH_THRESHOLD, topology_accumulator
from modules.scenegen.types import Scene


@dataclass
class Prediction:
    """Decoded model output for one scene, in GT units.

    ``te_class_scores`` are per-attribute probabilities without the no-object
    column; ``lanes`` are in BEV meters; ``tecl [N_TE, N_CL]`` and ``clcl``
    hold edge probabilities.
    """

    te_boxes: np.ndarray
    te_class_scores: np.ndarray
    lanes: np.ndarray
    lane_scores: np.ndarray
    tecl: np.ndarray
    clcl: np.ndarray

    @classmethod
    def empty(cls, c_te: int, points: int = 2) -> "Prediction":
        return cls(
            te_boxes=np.zeros((0, 4)),
            te_class_scores=np.zeros((0, c_te)),
            lanes=np.zeros((0, points, 2)),
            lane_scores=np.zeros(0),
            tecl=np.zeros((0, 0)),
            clcl=np.zeros((0, 0)),
        )


def oracle_prediction(scene: Scene, c_te: int) -> Prediction:
    """Ground truth restated as a prediction with unit confidence."""
    scores = np.zeros((scene.n_tes, c_te))
    scores[np.arange(scene.n_tes), scene.te_classes()] = 1.0
    return Prediction(
        te_boxes=scene.te_boxes(),
        te_class_scores=scores,
        lanes=scene.lane_array(),
        lane_scores=np.ones(scene.n_lanes),
        tecl=scene.a_lt.T.astype(float),
        clcl=scene.a_ll.astype(float),
    )


@dataclass
class SceneRecords:
    det_l: Dict[float, APAccumulator] = field(default_factory=dict)
    det_t: Dict[int, APAccumulator] = field(default_factory=dict)
    top_ll: APAccumulator = field(default_factory=APAccumulator)
    top_lt: APAccumulator = field(default_factory=APAccumulator)

    def merge(self, other: "SceneRecords") -> "SceneRecords":
        def join(a: Dict, b: Dict) -> Dict:
            keys = sorted(set(a) | set(b))
            return {k: a.get(k, APAccumulator()).merge(b.get(k, APAccumulator())) for k in keys}

        return SceneRecords(
            det_l=join(self.det_l, other.det_l),
            det_t=join(self.det_t, other.det_t),
            top_ll=self.top_ll.merge(other.top_ll),
            top_lt=self.top_lt.merge(other.top_lt),
        )


def evaluate_scene(
    pred: Prediction,
    scene: Scene,
    scene_idx: int = 0,
    lane_thresholds: Sequence[float] = LANE_THRESHOLDS,
    iou_threshold: float = IOU_THRESHOLD,
    topo_lane_threshold: float = LANE_MATCH_THRESHOLD,
) -> SceneRecords:
    dist = frechet_matrix(list(pred.lanes), scene.lanes).reshape(len(pred.lanes), scene.n_lanes)
    lane_scores = np.asarray(pred.lane_scores, dtype=float)
    gt_boxes, gt_classes = scene.te_boxes(), scene.te_classes()

    lanes_matched = lane_match(dist, lane_scores, topo_lane_threshold)
    _, te_scores = te_predicted_classes(pred.te_class_scores)
    tes_matched = te_match(pred.te_boxes, te_scores, gt_boxes, iou_threshold)

    return SceneRecords(
        det_l=lane_accumulators(dist, lane_scores, lane_thresholds, scene_idx),
        det_t=te_accumulators(pred.te_boxes, pred.te_class_scores, gt_boxes, gt_classes, iou_threshold, scene_idx),
        top_ll=topology_accumulator(pred.clcl, scene.a_ll, lanes_matched, lanes_matched, scene_idx, exclude_diagonal=True),
        top_lt=topology_accumulator(pred.tecl, scene.a_lt.T, tes_matched, lanes_matched, scene_idx),
    )


def reduce_records(parts: Sequence[SceneRecords]) -> SceneRecords:
    return reduce(lambda a, b: a.merge(b), parts, SceneRecords())


@dataclass
class MetricsReport:
    det_l: float
    det_t: float
    top_ll: float
    top_lt: float
    ols: float
    det_l_per_threshold: Dict[str, float] = field(default_factory=dict)
    det_t_per_attribute: Dict[str, float] = field(default_factory=dict)
    n_scenes: int = 0
    latency_ms: Optional[Dict[str, float]] = None
    param_count: Optional[int] = None

    def summary(self) -> Dict[str, float]:
        return {"det_l": self.det_l, "det_t": self.det_t, "top_ll": self.top_ll, "top_lt": self.top_lt, "ols": self.ols}

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = dict(self.summary())
        out["n_scenes"] = self.n_scenes
        out["det_l_per_threshold"] = dict(self.det_l_per_threshold)
        out["det_t_per_attribute"] = dict(self.det_t_per_attribute)
        if self.latency_ms is not None:
            out["latency_ms"] = dict(self.latency_ms)
        if self.param_count is not None:
            out["param_count"] = self.param_count
        return out

    def to_row(self) -> Dict[str, Any]:
        """Flat record for CSV."""
        row: Dict[str, Any] = dict(self.summary())
        row["n_scenes"] = self.n_scenes
        for k, v in self.det_l_per_threshold.items():
            row[f"det_l@{k}"] = v
        for k, v in self.det_t_per_attribute.items():
            row[f"det_t@{k}"] = v
        return row


def summarize(records: SceneRecords, n_scenes: int) -> MetricsReport:
    per_threshold = {f"{t:g}": acc.ap() for t, acc in sorted(records.det_l.items())}
    per_attribute = {str(c): acc.ap() for c, acc in sorted(records.det_t.items()) if acc.n_gt > 0}
    det_l = float(np.mean(list(per_threshold.values()))) if per_threshold else 0.0
    det_t = mean_attribute_ap(records.det_t)
    top_ll = records.top_ll.ap()
    top_lt = records.top_lt.ap()
    return MetricsReport(
        det_l=det_l,
        det_t=det_t,
        top_ll=top_ll,
        top_lt=top_lt,
        ols=ols(det_l, det_t, top_ll, top_lt),
        det_l_per_threshold=per_threshold,
        det_t_per_attribute=per_attribute,
        n_scenes=n_scenes,
    )


def evaluate_predictions(preds: Sequence[Prediction], scenes: Sequence[Scene], **thresholds) -> MetricsReport:
    """Sequential evaluation over paired predictions and scenes."""
    parts: List[SceneRecords] = [evaluate_scene(p, s, i, **thresholds) for i, (p, s) in enumerate(zip(preds, scenes))]
    return summarize(reduce_records(parts), len(parts))
