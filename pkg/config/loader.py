import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from config.schema import RunConfig, validate_config
from core.errors import ConfigError

DEFAULT_PATH = Path(__file__).resolve().parent / "default.yml"


# Mappings that are values in their own right: an override replaces them whole.
ATOMIC_KEYS = {("scene", "templates")}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any], path: Tuple[str, ...] = ()) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        key_path = path + (k,)
        if isinstance(v, dict) and isinstance(out.get(k), dict) and key_path not in ATOMIC_KEYS:
            out[k] = _deep_merge(out[k], v, key_path)
        else:
            out[k] = v
    return out


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    return data


class ConfigLoader:
    """Layered configuration: ``default.yml`` < user YAML < explicit overrides.

    A ``.env`` file at the repository root is loaded first without overriding
    variables already present in the environment.
    """

    def __init__(self, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        self.path = Path(path) if path is not None else None
        self.overrides = overrides or {}
        self.config: Dict[str, Any] = {}
        self.load()

    def load(self):
        repo_root = Path(__file__).resolve().parents[1]
        load_dotenv(repo_root / ".env", override=False)

        self.config = _read_yaml(DEFAULT_PATH) if DEFAULT_PATH.exists() else {}
        if self.path is not None:
            if not self.path.exists():
                raise ConfigError(f"config file not found: {self.path}")
            self.config = _deep_merge(self.config, _read_yaml(self.path))
        self.config = _deep_merge(self.config, self.overrides)

    def get(self, key: str, default=None):
        parts = key.split(".")
        cur = self.config
        for p in parts:
            if not isinstance(cur, dict) or p not in cur:
                return default
            cur = cur[p]
        return cur

    def resolve(self) -> RunConfig:
        return validate_config(self.config)


def dump_resolved(cfg: RunConfig, path) -> Path:
    """Write the fully resolved config as YAML (archived next to every run)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.model_dump(mode="json"), fh, sort_keys=False)
    return p


def env_threads(default: int = 1) -> int:
    """Evaluation fan-out width from ``TOPOREUSE_THREADS``."""
    raw = os.environ.get("TOPOREUSE_THREADS")
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"TOPOREUSE_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("TOPOREUSE_THREADS must be >= 1")
    return n


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    return ConfigLoader(path, overrides).resolve()
