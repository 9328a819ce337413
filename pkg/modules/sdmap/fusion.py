"""BEV neck and SD-map cross-attention fusion.

Both operate on flattened BEV grids ``[H*W, d]``.
"""

import math
from typing import Tuple

import numpy as np

from core.errors import DimensionError
from core.functional import conv2d_same
from core.layers import LayerNorm
from core.module import BaseModule, Parameter
from core.tensor import Tensor
from modules.decoder.attention import MultiHeadAttention


class BEVNeck(BaseModule):
    """Residual 3x3 convolution block ``f + relu(conv(f))`` over the BEV grid."""

    name = "bev_neck"

    def __init__(self, d: int, rng: np.random.Generator, kernel: int = 3):
        super().__init__()
        limit = math.sqrt(6.0 / (2 * kernel * kernel * d))
        self.conv_weight = Parameter(rng.uniform(-limit, limit, size=(kernel, kernel, d, d)))
        self.conv_bias = Parameter(np.zeros(d))

    def forward(self, grid: Tensor, shape: Tuple[int, int]) -> Tensor:
        h, w = shape
        if grid.ndim != 2 or grid.shape[0] != h * w:
            raise DimensionError("bev_neck", grid.shape, (h, w))
        d = grid.shape[1]
        y = conv2d_same(grid.reshape(h, w, d), self.conv_weight, self.conv_bias).relu()
        return grid + y.reshape(h * w, d)


class BEVFusion(BaseModule):
    """``f + MHA(LN(f), tokens, tokens)``; identity when the map has no tokens."""

    name = "bev_fusion"

    def __init__(self, d: int, h: int, rng: np.random.Generator):
        super().__init__()
        self.norm = LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, h, rng, out_bias=False)

    def forward(self, f_bev: Tensor, tokens: Tensor) -> Tensor:
        if tokens.ndim != 2 or tokens.shape[-1] != f_bev.shape[-1]:
            raise DimensionError("bev_fusion", f_bev.shape, tokens.shape)
        if tokens.shape[0] == 0:
            return f_bev
        return f_bev + self.cross_attn(self.norm(f_bev), tokens, tokens).out


def fuse_bev(f_bev: Tensor, tokens: Tensor, fusion: BEVFusion) -> Tensor:
    return fusion(f_bev, tokens)
