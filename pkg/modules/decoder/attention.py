"""Multi-head scaled dot-product attention over arbitrary leading extents."""

import math
from dataclasses import dataclass

import numpy as np

from core.errors import DimensionError
from core.layers import Linear
from core.module import BaseModule
from core.tensor import Tensor, softmax


@dataclass
class AttentionResult:
    """Attention output plus the projected queries/keys before head split."""

    out: Tensor
    q: Tensor
    k: Tensor


class MultiHeadAttention(BaseModule):
    name = "mha"

    def __init__(self, d: int, h: int, rng: np.random.Generator, out_bias: bool = True):
        super().__init__()
        if d % h != 0:
            raise DimensionError("mha", (d,), (h,))
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng)
        self.v_proj = Linear(d, d, rng)
        self.out_proj = Linear(d, d, rng, bias=out_bias)
        self._h = h

    def _split(self, x: Tensor) -> Tensor:
        *lead, n, d = x.shape
        return x.reshape(*lead, n, self._h, d // self._h).swapaxes(-2, -3)

    def _merge(self, x: Tensor) -> Tensor:
        *lead, h, n, dh = x.shape
        return x.swapaxes(-2, -3).reshape(*lead, n, h * dh)

    def forward(self, query: Tensor, key: Tensor, value: Tensor) -> AttentionResult:
        """``query [..., n, d]`` attends over ``key``/``value [..., m, d]``."""
        q = self.q_proj(query)
        k = self.k_proj(key)
        v = self.v_proj(value)
        dh = q.shape[-1] // self._h
        scores = (self._split(q) @ self._split(k).swapaxes(-1, -2)) * (1.0 / math.sqrt(dh))
        ctx = softmax(scores, axis=-1) @ self._split(v)
        return AttentionResult(out=self.out_proj(self._merge(ctx)), q=q, k=k)
