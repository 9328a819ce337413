import json

import pytest
import yaml
from conftest import SMALL
from typer.testing import CliRunner

from cli.main import app

runner = CliRunner()


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "small.yml"
    path.write_text(yaml.safe_dump(SMALL), encoding="utf-8")
    return path


@pytest.fixture
def dataset(tmp_path, cfg_file):
    path = tmp_path / "scenes.jsonl"
    result = runner.invoke(app, ["-q", "gen", "-c", str(cfg_file), "-o", str(path), "-n", "4"])
    assert result.exit_code == 0, result.output
    return path


def test_gen_writes_dataset(dataset):
    header = json.loads(dataset.read_text(encoding="utf-8").splitlines()[0])
    assert header["count"] == 4
    assert header["meta"]["seed"] == 0


def test_oracle_eval(tmp_path, cfg_file, dataset):
    out = tmp_path / "eval"
    result = runner.invoke(app, ["-q", "eval", "--oracle", "-c", str(cfg_file), "-d", str(dataset), "-o", str(out)])
    assert result.exit_code == 0, result.output
    metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["ols"] == pytest.approx(1.0)
    assert (out / "metrics.csv").exists()
    assert len(list((out / "svg").glob("scene_*.svg"))) == 2


def test_train_then_eval_checkpoint(tmp_path, cfg_file, dataset):
    run = tmp_path / "run"
    result = runner.invoke(
        app, ["-q", "train", "-c", str(cfg_file), "-d", str(dataset), "--steps", "2", "-o", str(run), "--mode", "nodistill"]
    )
    assert result.exit_code == 0, result.output
    assert (run / "checkpoint.json").exists() and (run / "loss.csv").exists()
    out = tmp_path / "eval"
    result = runner.invoke(
        app, ["-q", "eval", "-k", str(run / "checkpoint.json"), "-d", str(dataset), "-o", str(out), "--no-svg"]
    )
    assert result.exit_code == 0, result.output
    metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert 0.0 <= metrics["ols"] <= 1.0
    assert metrics["param_count"] > 0
    assert not (out / "svg").exists()


def test_infeasible_generation_exits_with_config_code(tmp_path):
    cfg = tmp_path / "bad.yml"
    cfg.write_text(
        yaml.safe_dump({"scene": {"templates": {"merge": 1.0}, "min_lanes": 2, "max_lanes": 2}}), encoding="utf-8"
    )
    result = runner.invoke(app, ["-q", "gen", "-c", str(cfg), "-o", str(tmp_path / "x.jsonl")])
    assert result.exit_code == 2


def test_invalid_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.yml"
    cfg.write_text("model:\n  depth: 3\n", encoding="utf-8")
    assert runner.invoke(app, ["-q", "gen", "-c", str(cfg)]).exit_code == 2
    assert runner.invoke(app, ["-q", "bench", "--runs", "5"]).exit_code == 2


def test_missing_inputs_exit_with_io_code(tmp_path, cfg_file):
    missing = str(tmp_path / "missing.jsonl")
    assert runner.invoke(app, ["-q", "eval", "--oracle", "-c", str(cfg_file), "-d", missing]).exit_code == 3
    assert runner.invoke(app, ["-q", "eval", "-d", missing]).exit_code == 3
    assert runner.invoke(app, ["-q", "eval", "-k", str(tmp_path / "nope.json")]).exit_code == 3


def test_student_without_teacher(tmp_path, cfg_file, dataset):
    result = runner.invoke(
        app, ["-q", "train", "-c", str(cfg_file), "-d", str(dataset), "--mode", "student", "-o", str(tmp_path / "s")]
    )
    assert result.exit_code == 3
