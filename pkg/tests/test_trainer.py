import csv

import numpy as np
import pytest
from conftest import small_config

from core.checkpoint import load_checkpoint
from core.errors import CheckpointError, ConfigError
from engine.evaluator import evaluate
from engine.trainer import Trainer, load_teacher, run_training
from modules.model import build_model
from modules.scenegen.generator import generate_scenes


@pytest.fixture(scope="module")
def scenes():
    return generate_scenes(range(3), small_config().scene, points=5)


def _params(model):
    return {name: p.numpy() for name, p in model.named_parameters()}


def test_resume_continues_bit_for_bit(tmp_path, scenes):
    cfg = small_config(mode="nodistill")
    straight = Trainer(cfg, scenes)
    straight.fit(4)

    first = Trainer(cfg, scenes, run_dir=tmp_path)
    first.fit(2)
    ckpt = load_checkpoint(tmp_path / "checkpoint.json")
    assert ckpt.step == 2

    resumed = Trainer(cfg, scenes)
    resumed.restore(ckpt)
    resumed.fit(4)
    expected = _params(straight.model)
    for name, value in _params(resumed.model).items():
        assert np.array_equal(value, expected[name]), name
    assert [r["total"] for r in resumed.history] == [r["total"] for r in straight.history[2:]]


def test_restore_rejects_other_mode(tmp_path, scenes):
    trainer = Trainer(small_config(mode="teacher"), scenes, run_dir=tmp_path)
    path = trainer.save()
    with pytest.raises(CheckpointError):
        Trainer(small_config(mode="nodistill"), scenes).restore(load_checkpoint(path))


def test_run_directory_layout(tmp_path, scenes):
    cfg = small_config(mode="teacher")
    trainer = run_training(cfg, scenes, tmp_path / "run")
    run = tmp_path / "run"
    for name in ("resolved_config.yml", "train.log", "loss.csv", "checkpoint.json"):
        assert (run / name).exists(), name
    with (run / "loss.csv").open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["step"]) for r in rows] == [1, 2, 3, 4]
    assert [int(r["scene"]) for r in rows] == [0, 1, 2, 0]
    assert all(np.isfinite(float(r["total"])) for r in rows)
    assert trainer.step == 4
    assert "step 4/4" in (run / "train.log").read_text(encoding="utf-8")


def test_student_needs_teacher(tmp_path, scenes):
    with pytest.raises(CheckpointError):
        Trainer(small_config(mode="student"), scenes)
    with pytest.raises(CheckpointError) as info:
        run_training(small_config(mode="student"), scenes, tmp_path / "run")
    assert info.value.exit_code == 3


def test_teacher_checkpoint_must_be_map_conditioned(tmp_path, scenes):
    path = Trainer(small_config(mode="nodistill"), scenes, run_dir=tmp_path).save()
    with pytest.raises(CheckpointError):
        load_teacher(path, 8)
    teacher_path = Trainer(small_config(mode="teacher"), scenes, run_dir=tmp_path / "t").save(tmp_path / "teacher.json")
    with pytest.raises(CheckpointError):
        load_teacher(teacher_path, 16)
    teacher = load_teacher(teacher_path, 8)
    assert not any(p.requires_grad for p in teacher.parameters())


def test_zero_weight_distillation_matches_nodistill(scenes):
    teacher = build_model(small_config(mode="teacher"))
    student = Trainer(small_config(mode="student", loss={"lambda_bev": 0.0}), scenes, teacher=teacher)
    plain = Trainer(small_config(mode="nodistill", loss={"lambda_bev": 0.0}), scenes)
    assert not student.distilling
    student.fit(3)
    plain.fit(3)
    expected = _params(plain.model)
    for name, value in _params(student.model).items():
        assert np.array_equal(value, expected[name]), name


def test_distillation_term_is_logged(scenes):
    teacher = build_model(small_config(mode="teacher"))
    trainer = Trainer(small_config(mode="student"), scenes, teacher=teacher)
    row = trainer.train_step()
    assert trainer.distilling
    assert row["distill"] > 0.0
    assert len(trainer._teacher_bev) == 1


def test_empty_scene_list_rejected():
    with pytest.raises(ConfigError):
        Trainer(small_config(), [])


@pytest.mark.slow
def test_single_scene_overfits(scenes):
    cfg = small_config(mode="teacher", optim={"steps": 150, "lr": 0.005, "log_every": 50})
    trainer = Trainer(cfg, scenes[:1])
    history = trainer.fit()
    first = np.mean([r["total"] for r in history[:10]])
    last = np.mean([r["total"] for r in history[-10:]])
    assert last < 0.5 * first


def test_frozen_teacher_is_untouched_by_a_student_epoch(scenes):
    teacher = build_model(small_config(mode="teacher"), seed=3).requires_grad_(False)
    before = _params(teacher)
    trainer = Trainer(small_config(mode="student"), scenes, teacher=teacher)
    trainer.fit(len(scenes))
    assert trainer.step == len(scenes)
    for name, value in _params(teacher).items():
        assert np.array_equal(value, before[name]), name
    assert all(p.grad is None for p in teacher.parameters())


@pytest.mark.slow
def test_single_scene_loss_keeps_falling(scenes):
    cfg = small_config(mode="teacher", optim={"steps": 400, "lr": 0.002, "log_every": 400, "ckpt_every": 400})
    history = Trainer(cfg, scenes[:1]).fit()
    totals = np.array([r["total"] for r in history[50:]])
    smoothed = np.convolve(totals, np.ones(20) / 20, mode="valid")
    rises = np.diff(smoothed)
    assert np.all(rises <= 0.02 * smoothed[:-1]), float(rises.max())
    assert smoothed[-1] < smoothed[0]


OVERFIT = {"model": {"d": 16, "ffn_width": 32}}


def _overfit_config(mode, steps):
    return small_config(mode=mode, optim={"steps": steps, "lr": 0.005, "log_every": 1000, "ckpt_every": 1000}, **OVERFIT)


@pytest.fixture(scope="module")
def four_scenes():
    return generate_scenes(range(4), _overfit_config("teacher", 1).scene, points=5)


def _steps_to_topology(mode, scenes, keys, target=0.9, budget=5000, chunk=250):
    """First checkpoint (every ``chunk`` steps) at which every ``keys`` metric reaches ``target`` on the training scenes."""
    cfg = _overfit_config(mode, budget)
    trainer = Trainer(cfg, scenes)
    while trainer.step < budget:
        trainer.fit(trainer.step + chunk)
        report = evaluate(scenes, cfg, model=trainer.model, threads=1).report
        if all(getattr(report, k) >= target for k in keys):
            return trainer.step
    return None


@pytest.mark.slow
def test_four_scene_overfit_cuts_loss_below_a_tenth(four_scenes):
    history = Trainer(_overfit_config("teacher", 2000), four_scenes).fit()
    first = np.mean([r["total"] for r in history[:4]])
    last = np.mean([r["total"] for r in history[-4:]])
    assert last < 0.1 * first, (first, last)


@pytest.mark.slow
def test_teacher_overfits_topology_within_budget(four_scenes):
    steps = _steps_to_topology("teacher", four_scenes, ("top_ll", "top_lt"))
    assert steps is not None and steps <= 5000


@pytest.mark.slow
def test_map_helps_fit_lane_topology_sooner(four_scenes):
    teacher = _steps_to_topology("teacher", four_scenes, ("top_ll",))
    map_free = _steps_to_topology("nodistill", four_scenes, ("top_ll",))
    assert teacher is not None
    assert map_free is None or teacher <= map_free
