import json

import pytest
from conftest import small_config

from engine.ablation import AblationResult, ablation_variants, derive_config, run_ablation, split_scenes
from modules.scenegen.generator import generate_scenes


def test_variants_cover_the_sweep():
    names = [v.name for v in ablation_variants((0.1, 1.0, 10.0))]
    assert names == ["teacher", "student_l0.1", "student_l1", "student_l10", "nodistill", "interactions"]


def test_derive_config(small_cfg):
    cfg = derive_config(small_cfg, "student", 7, 10.0)
    assert cfg.mode == "student" and cfg.optim.seed == 7 and cfg.loss.lambda_bev == 10.0
    assert cfg.model == small_cfg.model
    assert derive_config(small_cfg, "nodistill", 1).loss.lambda_bev == small_cfg.loss.lambda_bev


def test_split_scenes():
    scenes = list(range(10))
    assert split_scenes(scenes, None) == (scenes[:5], scenes[5:])
    assert split_scenes(scenes, 8) == (scenes[:8], scenes[8:])
    assert split_scenes(scenes[:1], None) == (scenes[:1], scenes[:1])


def test_summary_means_skip_missing_values():
    result = AblationResult(
        rows=[
            {"variant": "teacher", "mode": "teacher", "ols": 0.4, "bev_mse": None},
            {"variant": "teacher", "mode": "teacher", "ols": 0.6, "bev_mse": None},
            {"variant": "nodistill", "mode": "nodistill", "ols": 0.3, "bev_mse": 2.0},
        ]
    )
    summary = result.summary()
    assert [s["variant"] for s in summary] == ["teacher", "nodistill"]
    assert result.mean("teacher") == pytest.approx(0.5)
    assert summary[0]["mean_bev_mse"] is None and summary[1]["mean_bev_mse"] == 2.0
    with pytest.raises(KeyError):
        result.mean("missing")


def test_small_ablation_run(tmp_path):
    cfg = small_config()
    scenes = generate_scenes(range(4), cfg.scene, points=5)
    train, held_out = split_scenes(scenes, 2)
    result = run_ablation(cfg, train, held_out, seeds=(0,), lambdas=(0.0, 1.0), steps=1, out_dir=tmp_path)
    assert [r["variant"] for r in result.rows] == ["teacher", "student_l0", "student_l1", "nodistill", "interactions"]
    by_name = {r["variant"]: r for r in result.rows}
    assert by_name["teacher"]["bev_mse"] is None
    assert by_name["student_l0"]["bev_mse"] == pytest.approx(by_name["nodistill"]["bev_mse"])
    assert by_name["student_l0"]["ols"] == pytest.approx(by_name["nodistill"]["ols"])
    saved = json.loads((tmp_path / "ablation.json").read_text(encoding="utf-8"))
    assert len(saved["runs"]) == 5 and len(saved["summary"]) == 5
    assert (tmp_path / "ablation.csv").exists()


@pytest.fixture(scope="module")
def three_seed_ablation():
    cfg = small_config(optim={"steps": 400, "lr": 0.005, "log_every": 400, "ckpt_every": 400})
    scenes = generate_scenes(range(80), cfg.scene, points=5)
    train, held_out = split_scenes(scenes, 16)
    assert len(held_out) == 64
    return run_ablation(cfg, train, held_out, seeds=(0, 1, 2), lambdas=(1.0,))


@pytest.mark.slow
def test_distillation_pulls_student_bev_toward_teacher(three_seed_ablation):
    result = three_seed_ablation
    assert len(result.rows) == 12
    assert result.mean("student_l1", "bev_mse") < result.mean("nodistill", "bev_mse")


@pytest.mark.slow
def test_distilled_student_scores_at_least_nodistill(three_seed_ablation):
    assert three_seed_ablation.mean("student_l1") >= three_seed_ablation.mean("nodistill")


@pytest.mark.slow
def test_extra_interactions_do_not_beat_teacher(three_seed_ablation):
    assert three_seed_ablation.mean("interactions") <= three_seed_ablation.mean("teacher")
