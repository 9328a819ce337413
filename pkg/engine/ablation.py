"""engine.ablation

Trains the map-conditioned teacher, students across a distillation-weight
sweep, a no-distillation student and the interactions variant for each seed,
then scores all of them on a held-out split. Student-side BEV features are
compared with the frozen teacher's to measure how much of the map prior was
transferred.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.schema import RunConfig, validate_config
from core.logger import get_logger
from core.output import save_output
from core.tensor import no_grad
from engine.evaluator import evaluate
from engine.trainer import Trainer
from modules.model.model import TopologyModel
from modules.scenegen.dataset import make_sample
from modules.scenegen.types import Scene

logger = get_logger("ablation")

DEFAULT_LAMBDAS = (0.1, 1.0, 10.0)


@dataclass
class Variant:
    name: str
    mode: str
    lambda_bev: Optional[float] = None


@dataclass
class AblationResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def summary(self) -> List[Dict[str, Any]]:
        """Mean of every numeric column per variant, in first-seen order."""
        grouped: Dict[str, List[Dict[str, Any]]] = defaultdict(list)
        for row in self.rows:
            grouped[row["variant"]].append(row)
        out = []
        for name, rows in grouped.items():
            entry: Dict[str, Any] = {"variant": name, "mode": rows[0]["mode"], "seeds": len(rows)}
            for key in ("det_l", "det_t", "top_ll", "top_lt", "ols", "bev_mse"):
                values = [r[key] for r in rows if r.get(key) is not None]
                entry[f"mean_{key}"] = float(np.mean(values)) if values else None
            out.append(entry)
        return out

    def mean(self, variant: str, key: str = "ols") -> float:
        for entry in self.summary():
            if entry["variant"] == variant:
                return entry[f"mean_{key}"]
        raise KeyError(variant)


def ablation_variants(lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> List[Variant]:
    variants = [Variant("teacher", "teacher")]
    variants += [Variant(f"student_l{lam:g}", "student", float(lam)) for lam in lambdas]
    variants += [Variant("nodistill", "nodistill"), Variant("interactions", "interactions")]
    return variants


def derive_config(cfg: RunConfig, mode: str, seed: int, lambda_bev: Optional[float] = None) -> RunConfig:
    raw = cfg.model_dump(mode="json")
    raw["mode"] = mode
    raw["optim"]["seed"] = seed
    raw["teacher_checkpoint"] = None
    if lambda_bev is not None:
        raw["loss"]["lambda_bev"] = lambda_bev
    return validate_config(raw)


def bev_mse(model: TopologyModel, teacher: TopologyModel, scenes: Sequence[Scene], cfg: RunConfig) -> float:
    """Mean squared gap between ``model`` and ``teacher`` BEV features over ``scenes``."""
    errors = []
    with no_grad():
        for scene in scenes:
            sample = make_sample(scene, cfg.model.d, cfg.scene, cfg.model.c_te)
            diff = model.bev_features(sample).numpy() - teacher.bev_features(sample).numpy()
            errors.append(float(np.mean(diff**2)))
    return float(np.mean(errors))


def split_scenes(scenes: Sequence[Scene], train_count: Optional[int]) -> Tuple[List[Scene], List[Scene]]:
    """First ``train_count`` scenes train, the rest are held out (half/half by default)."""
    scenes = list(scenes)
    n = train_count if train_count is not None else max(1, len(scenes) // 2)
    if n >= len(scenes):
        return scenes, scenes
    return scenes[:n], scenes[n:]


def run_ablation(
    cfg: RunConfig,
    train_scenes: Sequence[Scene],
    eval_scenes: Sequence[Scene],
    seeds: Sequence[int] = (0, 1, 2),
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    steps: Optional[int] = None,
    out_dir=None,
) -> AblationResult:
    result = AblationResult()
    variants = ablation_variants(lambdas)
    for seed in seeds:
        teacher: Optional[TopologyModel] = None
        for variant in variants:
            vcfg = derive_config(cfg, variant.mode, seed, variant.lambda_bev)
            trainer = Trainer(vcfg, train_scenes, teacher=teacher if variant.mode == "student" else None)
            trainer.fit(steps)
            model = trainer.model
            model.requires_grad_(False)
            if variant.mode == "teacher":
                teacher = model

            report = evaluate(eval_scenes, vcfg, model).report
            row: Dict[str, Any] = {"variant": variant.name, "mode": variant.mode, "seed": seed, **report.summary()}
            row["bev_mse"] = None if variant.mode == "teacher" else bev_mse(model, teacher, eval_scenes, vcfg)
            result.rows.append(row)
            logger.info(f"seed {seed} {variant.name}: OLS={row['ols']:.4f} bev_mse={row['bev_mse']}")

    if out_dir is not None:
        out = Path(out_dir)
        save_output(str(out / "ablation.json"), {"runs": result.rows, "summary": result.summary()}, quiet=True)
        save_output(str(out / "ablation.csv"), result.summary(), format="csv", quiet=True)
    return result
