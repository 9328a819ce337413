"""reports.generator

SVG scene reports: ground-truth and predicted lanes on a BEV panel, traffic
elements on a PV panel, and topology edges colored blue for true positives,
purple for false positives and red for missed ground-truth edges. Output is a
pure function of its inputs (no timestamps, fixed number formatting).
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader

from core.logger import get_logger
from modules.metrics.detection import lane_match, te_match, te_predicted_classes
from modules.metrics.frechet import frechet_matrix
from modules.metrics.report import Prediction
from modules.metrics.topology import LANE_MATCH_THRESHOLD
from modules.scenegen.types import Scene

logger = get_logger("reports")

TEMPLATES_DIR = os.path.join(os.path.dirname(__file__), "templates")
env = Environment(
    loader=FileSystemLoader(TEMPLATES_DIR),
    autoescape=True,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

BEV_SIZE = 400
PV_W, PV_H = 400, 240
GAP = 20

EDGE_COLORS = {"tp": "#1565c0", "fp": "#8e24aa", "fn": "#d32f2f"}
LEGEND = (("tp", "true positive edge"), ("fp", "false positive edge"), ("fn", "missed edge"))


@dataclass
class Edge:
    kind: str
    relation: str
    src: int
    dst: int


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def bev_xy(points: np.ndarray, extent: float, size: int = BEV_SIZE) -> np.ndarray:
    """BEV meters (x right, y forward) to panel pixels (y down)."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    x = (p[:, 0] + extent) / (2 * extent) * size
    y = (extent - p[:, 1]) / (2 * extent) * size
    return np.stack([x, y], axis=-1)


def _points_attr(xy: np.ndarray) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in xy)


def _midpoint(lane: np.ndarray, extent: float) -> Tuple[float, float]:
    xy = bev_xy(lane, extent)
    return tuple(xy[len(xy) // 2])


def _pv_rect(box: Sequence[float], x0: float) -> Dict[str, float]:
    cx, cy, w, h = (float(v) for v in box)
    return {"x": x0 + (cx - w / 2) * PV_W, "y": (cy - h / 2) * PV_H, "w": w * PV_W, "h": h * PV_H}


def classify_edges(
    pred_adj: np.ndarray,
    gt_adj: np.ndarray,
    row_match: Dict[int, int],
    col_match: Dict[int, int],
    rows_shown: Sequence[int],
    cols_shown: Sequence[int],
    threshold: float = 0.5,
    exclude_diagonal: bool = False,
    relation: str = "ll",
) -> Tuple[List[Edge], List[Edge]]:
    """Split predicted edges among shown objects into TP/FP and list uncovered GT edges.

    Predicted edges index prediction slots; missed edges index ground truth.
    """
    gt = np.asarray(gt_adj) != 0
    if exclude_diagonal and gt.shape[0] == gt.shape[1]:
        gt = gt & ~np.eye(gt.shape[0], dtype=bool)
    covered = np.zeros_like(gt)
    predicted: List[Edge] = []
    for i in rows_shown:
        for j in cols_shown:
            if exclude_diagonal and i == j:
                continue
            if pred_adj[i, j] < threshold:
                continue
            gi, gj = row_match.get(i), col_match.get(j)
            if gi is not None and gj is not None and gt[gi, gj]:
                covered[gi, gj] = True
                predicted.append(Edge("tp", relation, i, j))
            else:
                predicted.append(Edge("fp", relation, i, j))
    missed = [Edge("fn", relation, int(a), int(b)) for a, b in zip(*np.nonzero(gt & ~covered))]
    return predicted, missed


def scene_svg(
    pred: Prediction,
    scene: Scene,
    scene_idx: int,
    extent: float,
    score_threshold: float = 0.5,
    iou_threshold: float = 0.75,
    lane_threshold: float = LANE_MATCH_THRESHOLD,
) -> str:
    pv_x = BEV_SIZE + GAP
    lanes_shown = [i for i, s in enumerate(pred.lane_scores) if s >= score_threshold]
    te_classes, te_scores = te_predicted_classes(pred.te_class_scores)
    tes_shown = [i for i, s in enumerate(te_scores) if s >= score_threshold]

    dist = frechet_matrix(list(pred.lanes), scene.lanes).reshape(len(pred.lanes), scene.n_lanes)
    lanes_matched = lane_match(dist, np.asarray(pred.lane_scores, dtype=float), lane_threshold)
    tes_matched = te_match(pred.te_boxes, te_scores, scene.te_boxes(), iou_threshold)

    ll_pred, ll_missed = classify_edges(
        pred.clcl, scene.a_ll, lanes_matched, lanes_matched, lanes_shown, lanes_shown, score_threshold, True, "ll"
    )
    lt_pred, lt_missed = classify_edges(
        pred.tecl, scene.a_lt.T, tes_matched, lanes_matched, tes_shown, lanes_shown, score_threshold, False, "lt"
    )

    def te_center(box) -> Tuple[float, float]:
        r = _pv_rect(box, pv_x)
        return r["x"] + r["w"] / 2, r["y"] + r["h"] / 2

    edges = []
    for e in ll_pred + ll_missed:
        lanes = pred.lanes if e.kind != "fn" else scene.lanes
        (x1, y1), (x2, y2) = _midpoint(lanes[e.src], extent), _midpoint(lanes[e.dst], extent)
        edges.append((e, x1, y1, x2, y2))
    for e in lt_pred + lt_missed:
        if e.kind == "fn":
            (x1, y1), (x2, y2) = te_center(scene.tes[e.src].box), _midpoint(scene.lanes[e.dst], extent)
        else:
            (x1, y1), (x2, y2) = te_center(pred.te_boxes[e.src]), _midpoint(pred.lanes[e.dst], extent)
        edges.append((e, x1, y1, x2, y2))

    pred_boxes = []
    for i in tes_shown:
        r = _pv_rect(pred.te_boxes[i], pv_x)
        label = f"c{int(te_classes[i])} {te_scores[i]:.2f}"
        pred_boxes.append({**{k: _fmt(v) for k, v in r.items()}, "label_y": _fmt(max(r["y"] - 2, 10)), "label": label})

    context = {
        "scene_idx": scene_idx,
        "template": scene.template,
        "width": BEV_SIZE + GAP + PV_W,
        "height": BEV_SIZE,
        "bev_size": BEV_SIZE,
        "pv_x": pv_x,
        "pv_w": PV_W,
        "pv_h": PV_H,
        "gt_lanes": [_points_attr(bev_xy(lane, extent)) for lane in scene.lanes],
        "pred_lanes": [
            {"points": _points_attr(bev_xy(pred.lanes[i], extent)), "opacity": _fmt(float(pred.lane_scores[i]))}
            for i in lanes_shown
        ],
        "gt_boxes": [{k: _fmt(v) for k, v in _pv_rect(te.box, pv_x).items()} for te in scene.tes],
        "pred_boxes": pred_boxes,
        "edges": [
            {
                "kind": e.kind,
                "relation": e.relation,
                "color": EDGE_COLORS[e.kind],
                "x1": _fmt(x1),
                "y1": _fmt(y1),
                "x2": _fmt(x2),
                "y2": _fmt(y2),
            }
            for e, x1, y1, x2, y2 in edges
        ],
        "legend": [
            {"y": PV_H + 24 + 16 * k, "color": EDGE_COLORS[kind], "label": label} for k, (kind, label) in enumerate(LEGEND)
        ],
    }
    return env.get_template("scene.svg.j2").render(**context)


def write_scene_svgs(
    preds: Sequence[Prediction],
    scenes: Sequence[Scene],
    out_dir,
    extent: float,
    limit: int = 8,
    **thresholds,
) -> List[Path]:
    """Render up to ``limit`` scenes as ``scene_<idx>.svg`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for idx, (pred, scene) in enumerate(zip(preds, scenes)):
        if idx >= limit:
            break
        path = out / f"scene_{idx:03d}.svg"
        path.write_text(scene_svg(pred, scene, idx, extent, **thresholds), encoding="utf-8")
        paths.append(path)
    logger.debug(f"Rendered {len(paths)} scene SVG(s) into {out}")
    return paths
