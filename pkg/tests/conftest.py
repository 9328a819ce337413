import numpy as np
import pytest

from config.schema import validate_config
from core.layers import LayerNorm, Linear
from core.module import BaseModule, ModuleList, Parameter

SMALL = {
    "model": {"L": 2, "d": 8, "h": 2, "n_te": 3, "n_cl": 4, "points": 5, "ffn_width": 8, "sd_points": 4},
    "scene": {
        "max_lanes": 4,
        "max_tes": 3,
        "bev_hw": [4, 4],
        "pv_hw": [3, 4],
        "templates": {"straight": 1.0, "merge": 1.0, "split": 1.0},
    },
    "optim": {"steps": 4, "log_every": 1, "ckpt_every": 2, "lr": 0.01},
    "eval": {"svg_limit": 2},
    "data": {"count": 6},
}


def small_config(**overrides):
    """Tiny run configuration; ``overrides`` are merged one section deep."""
    raw = {k: dict(v) for k, v in SMALL.items()}
    for key, value in overrides.items():
        if isinstance(value, dict):
            raw.setdefault(key, {}).update(value)
        else:
            raw[key] = value
    return validate_config(raw)


@pytest.fixture
def small_cfg():
    return small_config()


class ToyModule(BaseModule):
    """Linear -> two LayerNorms -> per-feature scale; ``_hidden`` must stay out of the registry."""

    def __init__(self, rng):
        super().__init__()
        self.proj = Linear(3, 2, rng)
        self.blocks = ModuleList([LayerNorm(2), LayerNorm(2)])
        self.scale = Parameter(np.ones(2))
        self._hidden = Parameter(np.ones(1))

    def forward(self, x):
        return self.blocks[1](self.blocks[0](self.proj(x))) * self.scale


@pytest.fixture
def make_toy():
    return lambda seed=0: ToyModule(np.random.default_rng(seed))
