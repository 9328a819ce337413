import pytest
import yaml

from config.loader import ConfigLoader, _deep_merge, dump_resolved, env_threads, load_config
from config.schema import RunConfig, validate_config
from core.errors import ConfigError


def test_config_loader_defaults():
    cl = ConfigLoader()
    assert cl.get("mode") == "teacher"
    assert cl.get("model.d") == 32
    assert cl.get("model.nope", "fallback") == "fallback"
    cfg = cl.resolve()
    assert cfg.model.L == 3 and cfg.loss.lambda_bev == 1.0
    assert cfg.optim.clip_norm == 35.0


def test_default_yaml_matches_schema_defaults():
    assert load_config().model_dump() == RunConfig().model_dump()


def test_user_file_and_overrides_merge(tmp_path):
    user = tmp_path / "run.yml"
    user.write_text("mode: nodistill\nmodel:\n  d: 16\n  h: 2\n", encoding="utf-8")
    cfg = load_config(str(user), {"optim": {"steps": 7}})
    assert cfg.mode == "nodistill"
    assert cfg.model.d == 16 and cfg.model.L == 3
    assert cfg.optim.steps == 7


def test_user_templates_replace_the_default_set(tmp_path):
    user = tmp_path / "run.yml"
    user.write_text("scene:\n  templates:\n    merge: 1.0\n  max_lanes: 8\n", encoding="utf-8")
    cfg = load_config(str(user))
    assert cfg.scene.templates == {"merge": 1.0}
    assert cfg.scene.templates.get("straight", 0.0) == 0.0
    assert cfg.scene.max_lanes == 8 and cfg.scene.min_lanes == 2
    assert load_config(overrides={"scene": {"templates": {"split": 2.0}}}).scene.templates == {"split": 2.0}


def test_other_sections_still_merge_key_by_key():
    merged = _deep_merge({"scene": {"templates": {"a": 1.0, "b": 1.0}, "extent": 5.0}}, {"scene": {"templates": {"b": 3.0}}})
    assert merged == {"scene": {"templates": {"b": 3.0}, "extent": 5.0}}
    nested = _deep_merge({"x": {"templates": {"a": 1.0}}}, {"x": {"templates": {"b": 2.0}}})
    assert nested == {"x": {"templates": {"a": 1.0, "b": 2.0}}}


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as info:
        validate_config({"model": {"depth": 3}})
    assert info.value.key == "model.depth"
    with pytest.raises(ConfigError):
        validate_config({"verbose": True})


@pytest.mark.parametrize(
    "raw",
    [
        {"model": {"d": 30, "h": 4}},
        {"model": {"d": 9, "h": 3}},
        {"model": {"L": 0}},
        {"model": {"n_cl": 4}},
        {"scene": {"min_lanes": 5, "max_lanes": 3}},
        {"scene": {"templates": {"roundabout": 1.0}}},
        {"mode": "fancy"},
    ],
)
def test_invalid_configs(raw):
    with pytest.raises(ConfigError) as info:
        validate_config(raw)
    assert info.value.exit_code == 2


def test_missing_config_file():
    with pytest.raises(ConfigError):
        ConfigLoader("/definitely/not/here.yml")


def test_dump_resolved_roundtrip(tmp_path):
    cfg = load_config(overrides={"mode": "student", "teacher_checkpoint": "t.json"})
    path = dump_resolved(cfg, tmp_path / "resolved_config.yml")
    reloaded = validate_config(yaml.safe_load(path.read_text(encoding="utf-8")))
    assert reloaded == cfg


def test_env_threads(monkeypatch):
    monkeypatch.delenv("TOPOREUSE_THREADS", raising=False)
    assert env_threads() == 1
    monkeypatch.setenv("TOPOREUSE_THREADS", "4")
    assert env_threads() == 4
    monkeypatch.setenv("TOPOREUSE_THREADS", "0")
    with pytest.raises(ConfigError):
        env_threads()
    monkeypatch.setenv("TOPOREUSE_THREADS", "many")
    with pytest.raises(ConfigError):
        env_threads()
