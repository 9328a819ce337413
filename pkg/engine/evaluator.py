"""engine.evaluator

Per-scene evaluation fanned out through `AsyncEngine`, reduced with the
associative merge of `SceneRecords`. Reports carry no timestamps, so the same
checkpoint and dataset give byte-identical output.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from config.loader import env_threads
from config.schema import RunConfig, validate_config
from core.checkpoint import load_checkpoint
from core.errors import CheckpointError, ConfigError
from core.logger import get_logger
from core.output import save_output
from core.profiler import time_block
from core.tensor import no_grad
from engine.async_runner import AsyncEngine
from modules.metrics.report import (
    MetricsReport,
    Prediction,
    SceneRecords,
    evaluate_scene,
    oracle_prediction,
    reduce_records,
    summarize,
)
from modules.model.model import TopologyModel, build_model
from modules.scenegen.dataset import make_sample
from modules.scenegen.types import Scene

logger = get_logger("evaluator")


@dataclass
class EvaluationResult:
    report: MetricsReport
    predictions: List[Prediction]
    records: List[SceneRecords]


def load_model(path) -> Tuple[TopologyModel, RunConfig]:
    """Rebuild a model from the config embedded in its checkpoint.

    Raises:
        CheckpointError: missing or unreadable file, invalid embedded config, parameter mismatch
    """
    ckpt = load_checkpoint(path)
    try:
        cfg = validate_config(ckpt.config)
    except ConfigError as e:
        raise CheckpointError(str(path), f"embedded config is invalid: {e.message}")
    model = build_model(cfg)
    try:
        model.load_state_dict(ckpt.params)
    except CheckpointError as e:
        raise CheckpointError(str(path), e.message)
    model.requires_grad_(False)
    return model, cfg


def evaluate(
    scenes: Sequence[Scene],
    cfg: RunConfig,
    model: Optional[TopologyModel] = None,
    threads: Optional[int] = None,
) -> EvaluationResult:
    """Evaluate ``model`` (or ground truth fed back as predictions when ``None``)."""
    ev = cfg.eval
    c_te = cfg.model.c_te

    def one(index: int, scene: Scene):
        if model is None:
            pred = oracle_prediction(scene, c_te)
        else:
            with no_grad():
                pred = model.predict(make_sample(scene, cfg.model.d, cfg.scene, c_te))
        records = evaluate_scene(
            pred,
            scene,
            index,
            lane_thresholds=ev.lane_thresholds,
            iou_threshold=ev.iou_threshold,
            topo_lane_threshold=ev.topo_lane_threshold,
        )
        return pred, records

    workers = env_threads() if threads is None else threads
    with time_block(f"evaluate {len(scenes)} scenes"):
        results = AsyncEngine(workers).run(one, list(enumerate(scenes)))
    preds = [p for p, _ in results]
    records = [r for _, r in results]
    report = summarize(reduce_records(records), len(records))
    if model is not None:
        report.param_count = model.num_parameters()
    logger.info(f"Evaluated {len(scenes)} scenes with {workers} worker(s): OLS={report.ols:.4f}")
    return EvaluationResult(report=report, predictions=preds, records=records)


def write_report(report: MetricsReport, out_dir, quiet: bool = True) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    json_path = save_output(str(out_dir / "metrics.json"), report.to_dict(), quiet=quiet)
    csv_path = save_output(str(out_dir / "metrics.csv"), report.to_row(), format="csv", quiet=quiet)
    return json_path, csv_path
