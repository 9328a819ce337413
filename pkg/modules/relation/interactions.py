"""Extra-feature-interactions CLCL head.

Gated fusion over the full ``N x N`` resource, a 3x3 same-size convolution on
the pair grid, adaptive average pooling down to ``N_CL x N_CL`` and a per-cell
MLP. The convolution mixes neighbouring pairs, TE rows included.
"""

import math

import numpy as np

from core.functional import adaptive_avg_pool2d, conv2d_same
from core.layers import MLP
from core.module import BaseModule, Parameter
from core.tensor import Tensor
from modules.relation.head import GatedFusion
from modules.relation.resource import RelationResource


class InteractionsHead(BaseModule):
    name = "interactions_head"

    def __init__(self, d: int, rng: np.random.Generator, kernel: int = 3):
        super().__init__()
        self.fusion = GatedFusion(d, rng)
        fan = kernel * kernel * d
        limit = math.sqrt(6.0 / (2 * fan))
        self.conv_weight = Parameter(rng.uniform(-limit, limit, size=(kernel, kernel, d, d)))
        self.conv_bias = Parameter(np.zeros(d))
        self.mlp = MLP([d, d, 1], rng)

    def logits_from_fused(self, fused: Tensor, n_cl: int) -> Tensor:
        """``fused [N, N, d]`` -> logits ``[n_cl, n_cl]``."""
        y = conv2d_same(fused, self.conv_weight, self.conv_bias)
        y = adaptive_avg_pool2d(y, (n_cl, n_cl))
        return self.mlp(y).reshape(n_cl, n_cl)

    def forward(self, res: RelationResource) -> Tensor:
        return self.logits_from_fused(self.fusion(res.r), res.n_cl)


def interactions_variant(res: RelationResource, head: InteractionsHead) -> Tensor:
    return head(res)
