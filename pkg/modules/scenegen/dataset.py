"""modules.scenegen.dataset

JSON-lines scene container. Line 1 is a header object
(``format``, ``version``, ``count``, ``meta``); each following line is one
scene. Features are not stored: they are re-rendered from the scene seed.
See ``docs/DATASET_FORMAT.md``.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

from core.errors import CorruptDatasetError, DatasetError, DatasetVersionError
from core.logger import get_logger
from modules.scenegen.render import render_features
from modules.scenegen.types import FeatureMap, Scene

logger = get_logger("dataset")

FORMAT = "toporeuse-scenes"
VERSION = 1


@dataclass
class Dataset:
    scenes: List[Scene]
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.scenes)

    def __iter__(self) -> Iterator[Scene]:
        return iter(self.scenes)


@dataclass
class SceneSample:
    """A scene together with its rendered inputs."""

    scene: Scene
    f_pv: FeatureMap
    f_bev: FeatureMap


def write_dataset(path, scenes: Sequence[Scene], meta: Optional[Dict[str, Any]] = None) -> Path:
    """Write scenes atomically; equal inputs give byte-identical files."""
    p = Path(path)
    header = {"format": FORMAT, "version": VERSION, "count": len(scenes), "meta": meta or {}}
    tmp = p.with_suffix(p.suffix + ".tmp")
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with tmp.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, separators=(",", ":")) + "\n")
            for scene in scenes:
                fh.write(json.dumps(scene.to_dict(), separators=(",", ":")) + "\n")
        os.replace(tmp, p)
    except OSError as e:
        raise DatasetError(str(p), f"cannot write dataset: {e}")
    logger.info(f"Wrote {len(scenes)} scenes to {p}")
    return p


def read_dataset(path) -> Dataset:
    p = Path(path)
    if not p.exists():
        raise DatasetError(str(p), "dataset file not found")
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetError(str(p), f"cannot read dataset: {e}")

    lines = text.split("\n")
    if not lines or not lines[0].strip():
        raise CorruptDatasetError(str(p), "missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise CorruptDatasetError(str(p), f"bad header: {e}")
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise CorruptDatasetError(str(p), "not a toporeuse scene file")
    if header.get("version") != VERSION:
        raise DatasetVersionError(str(p), header.get("version"), VERSION)
    if not text.endswith("\n"):
        raise CorruptDatasetError(str(p), "truncated final record")

    body = [line for line in lines[1:] if line.strip()]
    count = header.get("count")
    if count != len(body):
        raise CorruptDatasetError(str(p), f"header declares {count} scenes, found {len(body)}")

    scenes = []
    for lineno, line in enumerate(body, start=2):
        try:
            scenes.append(Scene.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise CorruptDatasetError(str(p), f"line {lineno}: {e}")
    logger.debug(f"Read {len(scenes)} scenes from {p}")
    return Dataset(scenes=scenes, meta=header.get("meta") or {})


def make_sample(scene: Scene, d: int, scene_cfg, c_te: int = 4) -> SceneSample:
    """Render features for ``scene`` with the configured grids and noise."""
    f_pv, f_bev = render_features(
        scene,
        seed=scene.seed,
        noise_level=scene_cfg.noise_level,
        d=d,
        bev_hw=scene_cfg.bev_hw,
        pv_hw=scene_cfg.pv_hw,
        extent=scene_cfg.extent,
        c_te=c_te,
    )
    return SceneSample(scene=scene, f_pv=f_pv, f_bev=f_bev)
