"""modules.decoder.decoder

DETR-style pre-norm transformer decoders for traffic elements (over the PV
grid) and centerlines (over the BEV grid).

Each layer runs self-attention, cross-attention to the memory tokens and a
GELU feed-forward block, each as a residual branch behind its own LayerNorm.
The self-attention projected queries/keys of every layer are recorded as
attention taps at width ``d`` (before head split, scaling and softmax).
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from core.errors import DimensionError
from core.layers import MLP, LayerNorm
from core.module import BaseModule, ModuleList, Parameter
from core.tensor import Tensor, stack
from modules.decoder.attention import MultiHeadAttention
from modules.decoder.positional import grid_encoding
from modules.scenegen.types import FeatureMap


@dataclass
class DecoderOutput:
    """Last-layer embeddings ``[N, d]`` and stacked taps ``[N, L, d]``."""

    out: Tensor
    q: Tensor
    k: Tensor
    sa_inputs: List[Tensor] = field(default_factory=list)


@dataclass
class AttentionTaps:
    q_te: Tensor
    k_te: Tensor
    q_cl: Tensor
    k_cl: Tensor
    out_te: Tensor
    out_cl: Tensor

    @classmethod
    def from_outputs(cls, te: DecoderOutput, cl: DecoderOutput) -> "AttentionTaps":
        return cls(q_te=te.q, k_te=te.k, q_cl=cl.q, k_cl=cl.k, out_te=te.out, out_cl=cl.out)

    def detached(self) -> "AttentionTaps":
        return AttentionTaps(*(t.detach() for t in (self.q_te, self.k_te, self.q_cl, self.k_cl, self.out_te, self.out_cl)))


class DecoderLayer(BaseModule):
    name = "decoder_layer"

    def __init__(self, d: int, h: int, ffn_width: int, rng: np.random.Generator):
        super().__init__()
        self.norm1 = LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, h, rng)
        self.norm2 = LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, h, rng)
        self.norm3 = LayerNorm(d)
        self.ffn = MLP([d, ffn_width, d], rng, activation="gelu")

    def forward(self, x: Tensor, memory_keys: Tensor, memory: Tensor):
        s = self.norm1(x)
        sa = self.self_attn(s, s, s)
        x = x + sa.out
        x = x + self.cross_attn(self.norm2(x), memory_keys, memory).out
        x = x + self.ffn(self.norm3(x))
        return x, sa, s


class TransformerDecoder(BaseModule):
    """``L`` decoder layers over ``n_queries`` learned query embeddings."""

    name = "decoder"

    def __init__(self, L: int, d: int, h: int, ffn_width: int, n_queries: int, rng: np.random.Generator):
        super().__init__()
        self.query_embed = Parameter(rng.normal(0.0, 0.02, size=(n_queries, d)))
        self.layers = ModuleList(DecoderLayer(d, h, ffn_width, rng) for _ in range(L))
        self.norm = LayerNorm(d)
        self._d = d

    def forward(self, memory: Tensor, grid_shape) -> DecoderOutput:
        if memory.ndim != 2 or memory.shape[-1] != self._d:
            raise DimensionError("decoder", memory.shape, (self._d,))
        pos = Tensor(grid_encoding(tuple(grid_shape), self._d), dtype=memory.dtype)
        memory_keys = memory + pos
        x = self.query_embed
        qs, ks, inputs = [], [], []
        for layer in self.layers:
            x, sa, s = layer(x, memory_keys, memory)
            qs.append(sa.q)
            ks.append(sa.k)
            inputs.append(s)
        return DecoderOutput(out=self.norm(x), q=stack(qs, axis=1), k=stack(ks, axis=1), sa_inputs=inputs)


def run_te_decoder(f_pv: FeatureMap, decoder: TransformerDecoder) -> DecoderOutput:
    """Traffic-element decoder over the flattened PV grid."""
    return decoder(f_pv.grid, f_pv.shape)


def run_cl_decoder(f_bev: FeatureMap, decoder: TransformerDecoder) -> DecoderOutput:
    """Centerline decoder over the flattened BEV grid."""
    return decoder(f_bev.grid, f_bev.shape)
