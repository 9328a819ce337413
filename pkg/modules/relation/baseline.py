"""Two-stage topology baseline.

Consumes detached final decoder embeddings, runs two rounds of message passing
over the fully connected graph of all TE and CL nodes, then scores each pair
with an MLP. Topology losses therefore never reach the decoders.
"""

from typing import List

import numpy as np

from core.layers import MLP, Linear
from core.module import BaseModule, ModuleList
from core.tensor import Tensor, concat
from modules.relation.head import TopologyLogits


def _pairs(a: Tensor, b: Tensor) -> Tensor:
    """``[n, d]`` x ``[m, d]`` -> ``[n, m, 2d]`` of concatenated pairs."""
    n, d = a.shape
    m = b.shape[0]
    rows = a.reshape(n, 1, d).broadcast_to(n, m, d)
    cols = b.reshape(1, m, d).broadcast_to(n, m, d)
    return concat([rows, cols], axis=-1)


class TwoStageBaseline(BaseModule):
    name = "two_stage_baseline"

    def __init__(self, d: int, rng: np.random.Generator, rounds: int = 2):
        super().__init__()
        self.message = ModuleList(MLP([2 * d, d, d], rng) for _ in range(rounds))
        self.update = ModuleList(Linear(2 * d, d, rng) for _ in range(rounds))
        self.score_tecl = MLP([2 * d, 2 * d, 1], rng)
        self.score_clcl = MLP([2 * d, 2 * d, 1], rng)

    def forward(self, te_emb: Tensor, cl_emb: Tensor) -> TopologyLogits:
        n_te, n_cl = te_emb.shape[0], cl_emb.shape[0]
        x = concat([te_emb.detach(), cl_emb.detach()], axis=0)
        for message, update in zip(self.message, self.update):
            m = message(_pairs(x, x)).mean(axis=1)
            x = x + update(concat([x, m], axis=-1)).relu()
        te_x, cl_x = x[:n_te], x[n_te:]
        tecl = self.score_tecl(_pairs(te_x, cl_x)).reshape(n_te, n_cl)
        clcl = self.score_clcl(_pairs(cl_x, cl_x)).reshape(n_cl, n_cl)
        return TopologyLogits(tecl=tecl, clcl=clcl)


def two_stage_baseline(te_emb: Tensor, cl_emb: Tensor, head: TwoStageBaseline) -> TopologyLogits:
    return head(te_emb, cl_emb)


def baseline_param_count(d: int, rounds: int = 2) -> int:
    """Closed-form trainable scalar count of `TwoStageBaseline`."""
    message = (2 * d * d + d) + (d * d + d)
    update = 2 * d * d + d
    score = (2 * d * 2 * d + 2 * d) + (2 * d + 1)
    return rounds * (message + update) + 2 * score


def gated_head_param_count(L: int, d: int) -> int:
    """Closed-form count of projections plus the TECL and CLCL gated heads."""
    half = d // 2
    proj = (4 * L + 4) * (d * half + half)
    head = (d + 1) + (d * d + d) + (d * d + d) + (d + 1)
    return proj + 2 * head


__all__: List[str] = ["TwoStageBaseline", "baseline_param_count", "gated_head_param_count", "two_stage_baseline"]
