"""engine.trainer

Single-threaded training loop over a fixed list of scenes. Step ``k`` uses
scene ``k mod n``, so a run resumed from a checkpoint replays exactly the
batches the uninterrupted run would have seen.

A run directory holds ``resolved_config.yml``, ``train.log``, ``loss.csv``
(one row per step) and ``checkpoint.json``.
"""

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config.loader import dump_resolved
from config.schema import RunConfig, validate_config
from core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from core.errors import CheckpointError, ConfigError
from core.logger import get_logger
from core.optim import AdamW
from core.output import remove_file_logging, setup_file_logging
from core.tensor import Tensor, no_grad
from modules.matcher.criterion import TERMS, LossBundle, SetCriterion
from modules.model.model import MAP_MODES, TopologyModel, build_model
from modules.scenegen.dataset import SceneSample, make_sample
from modules.scenegen.types import Scene
from modules.sdmap.distill import BEVFeaturePair, distill_loss

logger = get_logger("trainer")

CHECKPOINT_NAME = "checkpoint.json"
LOSS_COLUMNS = ("step", "scene") + TERMS + ("total", "grad_norm")


def load_teacher(path, d: int) -> TopologyModel:
    """Restore a frozen map-conditioned model from a checkpoint.

    Raises:
        CheckpointError: missing file, non-map mode, or width different from ``d``
    """
    ckpt = load_checkpoint(path)
    try:
        tcfg = validate_config(ckpt.config)
    except ConfigError as e:
        raise CheckpointError(str(path), f"embedded config is invalid: {e.message}")
    if tcfg.mode not in MAP_MODES:
        raise CheckpointError(str(path), f"teacher checkpoint comes from mode '{tcfg.mode}', need one of {list(MAP_MODES)}")
    if tcfg.model.d != d:
        raise CheckpointError(str(path), f"teacher width d={tcfg.model.d} differs from student d={d}")
    teacher = build_model(tcfg)
    try:
        teacher.load_state_dict(ckpt.params)
    except CheckpointError as e:
        raise CheckpointError(str(path), e.message)
    teacher.requires_grad_(False)
    logger.info(f"Loaded frozen {tcfg.mode} teacher from {path} (step {ckpt.step})")
    return teacher


class Trainer:
    def __init__(
        self,
        cfg: RunConfig,
        scenes: Sequence[Scene],
        run_dir=None,
        teacher: Optional[TopologyModel] = None,
    ):
        if not scenes:
            raise ConfigError("training needs at least one scene", key="data")
        if cfg.mode == "student" and teacher is None:
            raise CheckpointError(cfg.teacher_checkpoint, "student mode requires a teacher checkpoint")
        self.cfg = cfg
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.model = build_model(cfg)
        self.criterion = SetCriterion(cfg.loss, cfg.scene.extent, cfg.model.c_te)
        self.optimizer = AdamW(
            self.model.named_parameters(),
            lr=cfg.optim.lr,
            weight_decay=cfg.optim.weight_decay,
            clip_norm=cfg.optim.clip_norm,
        )
        self.samples: List[SceneSample] = [make_sample(s, cfg.model.d, cfg.scene, cfg.model.c_te) for s in scenes]
        self.teacher = teacher if cfg.mode == "student" else None
        self._teacher_bev: Dict[int, Tensor] = {}
        self.step = 0
        self.history: List[Dict[str, float]] = []

    @property
    def distilling(self) -> bool:
        return self.teacher is not None and self.cfg.loss.lambda_bev > 0

    def teacher_bev(self, index: int) -> Tensor:
        """Fused teacher BEV for sample ``index``, computed once without a graph."""
        if index not in self._teacher_bev:
            with no_grad():
                self._teacher_bev[index] = self.teacher.bev_features(self.samples[index])
        return self._teacher_bev[index]

    def loss_for(self, index: int) -> LossBundle:
        sample = self.samples[index]
        out = self.model(sample)
        distill = None
        if self.distilling:
            distill = distill_loss(BEVFeaturePair(out.f_bev, self.teacher_bev(index)))
        return self.criterion(out, sample.scene, distill)

    def train_step(self) -> Dict[str, float]:
        index = self.step % len(self.samples)
        self.optimizer.zero_grad()
        bundle = self.loss_for(index)
        bundle.total.backward()
        grad_norm = self.optimizer.step()
        self.step += 1
        row = {"step": self.step, "scene": index, **bundle.as_dict(), "grad_norm": grad_norm}
        self.history.append(row)
        return row

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            params=self.model.state_dict(),
            config=self.cfg.model_dump(mode="json"),
            step=self.step,
            optimizer=self.optimizer.state_dict(),
            extra={"mode": self.cfg.mode, "n_scenes": len(self.samples)},
        )

    def save(self, path=None) -> Path:
        if path is None:
            if self.run_dir is None:
                raise ConfigError("no run directory to save the checkpoint into", key="output_dir")
            path = self.run_dir / CHECKPOINT_NAME
        return save_checkpoint(path, self.checkpoint())

    def restore(self, ckpt: Checkpoint) -> None:
        """Load weights, optimizer moments and step count from ``ckpt``."""
        if ckpt.config.get("mode") != self.cfg.mode:
            raise CheckpointError(None, f"checkpoint mode '{ckpt.config.get('mode')}' differs from run mode '{self.cfg.mode}'")
        self.model.load_state_dict(ckpt.params)
        if ckpt.optimizer is not None:
            self.optimizer.load_state_dict(ckpt.optimizer)
        self.step = ckpt.step

    def _append_losses(self, rows: Sequence[Dict[str, float]]) -> None:
        if self.run_dir is None or not rows:
            return
        path = self.run_dir / "loss.csv"
        new = not path.exists()
        with path.open("a", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(LOSS_COLUMNS), lineterminator="\n")
            if new:
                writer.writeheader()
            for row in rows:
                writer.writerow({k: row[k] for k in LOSS_COLUMNS})

    def fit(self, steps: Optional[int] = None) -> List[Dict[str, float]]:
        """Train until ``steps`` total steps (default ``optim.steps``) have run."""
        target = self.cfg.optim.steps if steps is None else steps
        pending: List[Dict[str, float]] = []
        log_every, ckpt_every = self.cfg.optim.log_every, self.cfg.optim.ckpt_every
        while self.step < target:
            row = self.train_step()
            pending.append(row)
            if self.step % log_every == 0 or self.step == 1:
                terms = " ".join(f"{k}={row[k]:.4f}" for k in TERMS)
                logger.info(f"step {self.step}/{target} total={row['total']:.5f} {terms}")
            if self.run_dir is not None and self.step % ckpt_every == 0:
                self._append_losses(pending)
                pending = []
                self.save()
        self._append_losses(pending)
        if self.run_dir is not None:
            self.save()
        return self.history


def run_training(
    cfg: RunConfig,
    scenes: Sequence[Scene],
    run_dir,
    resume: Optional[str] = None,
    steps: Optional[int] = None,
) -> Trainer:
    """Prepare the run directory, train and leave a final checkpoint behind."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_resolved(cfg, run_dir / "resolved_config.yml")
    handler = setup_file_logging(str(run_dir / "train.log"))
    try:
        teacher = None
        if cfg.mode == "student":
            if not cfg.teacher_checkpoint:
                raise CheckpointError(None, "student mode requires teacher_checkpoint")
            teacher = load_teacher(cfg.teacher_checkpoint, cfg.model.d)
        trainer = Trainer(cfg, scenes, run_dir=run_dir, teacher=teacher)
        if resume:
            trainer.restore(load_checkpoint(resume))
            logger.info(f"Resumed from {resume} at step {trainer.step}")
        logger.info(f"Training mode={cfg.mode} scenes={len(scenes)} params={trainer.model.num_parameters()}")
        trainer.fit(steps)
        return trainer
    finally:
        remove_file_logging(handler)
