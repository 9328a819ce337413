"""Evaluation: Fréchet lane AP, box AP, topology AP, the aggregate score and head benchmarks."""

from .ap import APAccumulator, interpolated_ap
from .bench import BenchResult, bench, param_count, relative_speed_pct
from .detection import det_l, det_t, iou_matrix
from .frechet import frechet, frechet_matrix
from .ols import PUBLISHED_ROWS, ols, published_ols
from .report import (
    MetricsReport,
    Prediction,
    SceneRecords,
    evaluate_predictions,
    evaluate_scene,
    oracle_prediction,
    reduce_records,
    summarize,
)
from .topology import top_score

__all__ = [
    "APAccumulator",
    "BenchResult",
    "MetricsReport",
    "PUBLISHED_ROWS",
    "Prediction",
    "SceneRecords",
    "bench",
    "det_l",
    "det_t",
    "evaluate_predictions",
    "evaluate_scene",
    "frechet",
    "frechet_matrix",
    "interpolated_ap",
    "iou_matrix",
    "ols",
    "oracle_prediction",
    "param_count",
    "published_ols",
    "reduce_records",
    "relative_speed_pct",
    "summarize",
    "top_score",
]
