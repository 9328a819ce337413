"""config.schema

Pydantic models for run configuration. Every section rejects unknown keys;
cross-section invariants (scene counts versus model query counts) are checked
on `RunConfig`.
"""

from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError

MODES = ("teacher", "student", "nodistill", "interactions", "baseline2stage")
TEMPLATES = ("straight", "merge", "split", "crossroad")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(_Section):
    L: int = Field(3, ge=1)
    d: int = Field(32, ge=2)
    h: int = Field(4, ge=1)
    n_te: int = Field(12, ge=1)
    n_cl: int = Field(16, ge=1)
    points: int = Field(11, ge=2)
    ffn_width: int = Field(64, ge=1)
    c_te: int = Field(4, ge=1)
    sd_points: int = Field(8, ge=2)

    @model_validator(mode="after")
    def _widths(self):
        if self.d % self.h != 0:
            raise ValueError(f"d={self.d} is not divisible by h={self.h}")
        if self.d % 2 != 0:
            raise ValueError(f"d={self.d} must be even (relation projections halve the width)")
        return self


class SceneConfig(_Section):
    min_lanes: int = Field(2, ge=2)
    max_lanes: int = Field(16, ge=2)
    min_tes: int = Field(1, ge=1)
    max_tes: int = Field(6, ge=1)
    templates: Dict[str, float] = Field(default_factory=lambda: {t: 1.0 for t in TEMPLATES})
    extent: float = Field(25.0, gt=0)
    bev_hw: Tuple[int, int] = (16, 16)
    pv_hw: Tuple[int, int] = (12, 20)
    noise_level: float = Field(0.1, ge=0)
    sd_jitter: float = Field(1.0, ge=0)
    connect_eps: float = Field(0.5, gt=0)

    @field_validator("templates")
    @classmethod
    def _template_mix(cls, v: Dict[str, float]):
        unknown = [k for k in v if k not in TEMPLATES]
        if unknown:
            raise ValueError(f"unknown templates {unknown}; expected a subset of {list(TEMPLATES)}")
        if any(w < 0 for w in v.values()) or sum(v.values()) <= 0:
            raise ValueError("template weights must be non-negative with a positive sum")
        return v

    @model_validator(mode="after")
    def _bounds(self):
        if self.min_lanes > self.max_lanes:
            raise ValueError(f"min_lanes={self.min_lanes} > max_lanes={self.max_lanes}")
        if self.min_tes > self.max_tes:
            raise ValueError(f"min_tes={self.min_tes} > max_tes={self.max_tes}")
        return self


class LossConfig(_Section):
    lambda_cls: float = Field(1.0, ge=0)
    lambda_l1: float = Field(2.5, ge=0)
    lambda_top: float = Field(5.0, ge=0)
    lambda_bev: float = Field(1.0, ge=0)
    focal_alpha: float = Field(0.25, gt=0, lt=1)
    focal_gamma: float = Field(2.0, ge=0)


class OptimConfig(_Section):
    lr: float = Field(1e-3, gt=0)
    weight_decay: float = Field(0.0, ge=0)
    clip_norm: Optional[float] = Field(35.0, gt=0)
    steps: int = Field(2000, ge=0)
    seed: int = 0
    log_every: int = Field(50, ge=1)
    ckpt_every: int = Field(500, ge=1)


class EvalConfig(_Section):
    lane_thresholds: Tuple[float, ...] = (1.0, 2.0, 3.0)
    iou_threshold: float = Field(0.75, gt=0, le=1)
    topo_lane_threshold: float = Field(1.5, gt=0)
    render_svg: bool = True
    svg_limit: int = Field(8, ge=0)
    bench_warmup: int = Field(10, ge=10)
    bench_runs: int = Field(100, ge=100)


class DataConfig(_Section):
    path: str = "data/scenes.jsonl"
    count: int = Field(64, ge=1)
    seed: int = 0
    train_count: Optional[int] = Field(None, ge=1)


class RunConfig(_Section):
    mode: Literal["teacher", "student", "nodistill", "interactions", "baseline2stage"] = "teacher"
    model: ModelConfig = Field(default_factory=ModelConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    teacher_checkpoint: Optional[str] = None
    detach_topology: bool = False
    dtype: Literal["float64", "float32"] = "float64"
    output_dir: str = "runs"

    @model_validator(mode="after")
    def _capacity(self):
        if self.scene.max_lanes > self.model.n_cl:
            raise ValueError(f"scene.max_lanes={self.scene.max_lanes} exceeds model.n_cl={self.model.n_cl}")
        if self.scene.max_tes > self.model.n_te:
            raise ValueError(f"scene.max_tes={self.scene.max_tes} exceeds model.n_te={self.model.n_te}")
        return self

    @property
    def uses_sdmap(self) -> bool:
        return self.mode in ("teacher", "interactions")


def validate_config(raw: dict) -> RunConfig:
    """Validate a raw mapping, converting pydantic failures into `ConfigError`."""
    try:
        return RunConfig.model_validate(raw or {})
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(p) for p in first.get("loc", ())) or None
        raise ConfigError(first.get("msg", str(e)), key=key) from e
