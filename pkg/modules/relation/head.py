"""Gated-sum relation head: fuse the source-layer axis, then score each pair with an MLP."""

from dataclasses import dataclass

import numpy as np

from core.errors import DimensionError
from core.layers import MLP, Linear
from core.module import BaseModule
from core.tensor import Tensor


@dataclass
class TopologyLogits:
    tecl: Tensor
    clcl: Tensor


class GatedFusion(BaseModule):
    """``[A, B, S, d] -> [A, B, d]`` with ``v = sum_l sigmoid(w_g . r_l + b_g) (W_v r_l + b_v)``.

    Gate and value weights are shared across source layers and pairs.
    """

    name = "gated_fusion"

    def __init__(self, d: int, rng: np.random.Generator):
        super().__init__()
        self.gate = Linear(d, 1, rng)
        self.value = Linear(d, d, rng)

    def forward(self, r: Tensor) -> Tensor:
        if r.ndim != 4:
            raise DimensionError("gated_fusion", r.shape)
        a, b, _, d = r.shape
        g = self.gate(r).sigmoid()
        v = self.value(r)
        return (g.swapaxes(-1, -2) @ v).reshape(a, b, d)

    def pairwise(self, rows: Tensor, cols: Tensor) -> Tensor:
        """``forward`` on ``r[a, b, s] = concat(rows[a, s], cols[b, s])`` without building ``r``.

        The gate and value weights split into a row half and a column half, so
        each side is projected once and only the ``[A, B, S]`` gates are paired.
        """
        if rows.ndim != 3 or cols.ndim != 3 or rows.shape[1:] != cols.shape[1:]:
            raise DimensionError("gated_fusion", rows.shape, cols.shape)
        a, s, half = rows.shape
        b = cols.shape[0]
        if 2 * half != self.gate.d_in:
            raise DimensionError("gated_fusion", rows.shape, self.gate.weight.shape)
        wg, wv = self.gate.weight, self.value.weight
        g_rows = (rows @ wg[:half] + self.gate.bias).reshape(a, 1, s).broadcast_to(a, b, s)
        g_cols = (cols @ wg[half:]).reshape(1, b, s).broadcast_to(a, b, s)
        g = (g_rows + g_cols).sigmoid()
        v_rows = rows @ wv[:half] + self.value.bias
        v_cols = cols @ wv[half:]
        return g @ v_rows + (g.swapaxes(0, 1) @ v_cols).swapaxes(0, 1)


class GatedRelationHead(BaseModule):
    name = "gated_relation_head"

    def __init__(self, d: int, rng: np.random.Generator):
        super().__init__()
        self.fusion = GatedFusion(d, rng)
        self.mlp = MLP([d, d, 1], rng)

    def forward(self, r: Tensor) -> Tensor:
        a, b = r.shape[0], r.shape[1]
        return self.mlp(self.fusion(r)).reshape(a, b)

    def pairwise(self, rows: Tensor, cols: Tensor) -> Tensor:
        """Logits ``[A, B]`` from row features ``[A, S, d/2]`` and column features ``[B, S, d/2]``."""
        return self.mlp(self.fusion.pairwise(rows, cols)).reshape(rows.shape[0], cols.shape[0])


def gated_relation_logits(r_slice: Tensor, head: GatedRelationHead) -> Tensor:
    """Topology logits ``[A, B]`` for a task slice ``[A, B, L+1, d]``."""
    return head(r_slice)
