"""modules.relation.resource

Relation resource built from cross-decoder attention taps.

Rows and columns are ordered as the TE block (``0..N_TE-1``) followed by the CL
block (``N_TE..N-1``). For source layer ``l < L`` entry ``r[i, j, l]`` is the
concatenation of the projected query of ``i`` and the projected key of ``j``;
slice ``l = L`` is built the same way from the projected last-layer decoder
outputs.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.errors import ConfigError, DimensionError
from core.layers import Linear
from core.module import BaseModule, ModuleList
from core.tensor import Tensor, concat, stack
from modules.decoder.decoder import AttentionTaps


class RelationProjections(BaseModule):
    """Per-layer, per-decoder query/key maps ``d -> d/2`` plus last-layer output maps."""

    name = "relation_projections"

    def __init__(self, L: int, d: int, rng: np.random.Generator):
        super().__init__()
        if d % 2 != 0:
            raise ConfigError(f"relation projections need an even width, got d={d}", key="model.d")
        half = d // 2
        self.q_te = ModuleList(Linear(d, half, rng) for _ in range(L))
        self.k_te = ModuleList(Linear(d, half, rng) for _ in range(L))
        self.q_cl = ModuleList(Linear(d, half, rng) for _ in range(L))
        self.k_cl = ModuleList(Linear(d, half, rng) for _ in range(L))
        self.z_q_te = Linear(d, half, rng)
        self.z_k_te = Linear(d, half, rng)
        self.z_q_cl = Linear(d, half, rng)
        self.z_k_cl = Linear(d, half, rng)
        self._L = L
        self._d = d

    @property
    def L(self) -> int:
        return self._L

    def forward(self, taps: AttentionTaps):
        return build_concat_qk(taps, self)


@dataclass
class RelationResource:
    r: Tensor
    n_te: int
    n_cl: int

    @property
    def n(self) -> int:
        return self.n_te + self.n_cl


def build_concat_qk(taps: AttentionTaps, proj: RelationProjections) -> Tuple[Tensor, Tensor]:
    """Project every layer's taps and stack TE rows above CL rows: ``[N, L, d/2]`` each."""
    L = proj.L
    for t in (taps.q_te, taps.k_te, taps.q_cl, taps.k_cl):
        if t.ndim != 3 or t.shape[1] != L or t.shape[2] != proj._d:
            raise DimensionError("build_concat_qk", t.shape, (L, proj._d))
    qs, ks = [], []
    for layer in range(L):
        qs.append(concat([proj.q_te[layer](taps.q_te[:, layer]), proj.q_cl[layer](taps.q_cl[:, layer])], axis=0))
        ks.append(concat([proj.k_te[layer](taps.k_te[:, layer]), proj.k_cl[layer](taps.k_cl[:, layer])], axis=0))
    return stack(qs, axis=1), stack(ks, axis=1)


def relation_features(
    Q: Tensor, K: Tensor, out_te: Tensor, out_cl: Tensor, proj: RelationProjections
) -> Tuple[Tensor, Tensor]:
    """Row and column halves of R before pairing: ``[N, L+1, d/2]`` each.

    ``r[i, j, s]`` is ``concat(rows[i, s], cols[j, s])``.
    """
    n_te, n_cl = out_te.shape[0], out_cl.shape[0]
    n, _, half = Q.shape
    if K.shape != Q.shape or n != n_te + n_cl:
        raise DimensionError("relation_features", Q.shape, K.shape, (n_te + n_cl,))
    zq = concat([proj.z_q_te(out_te), proj.z_q_cl(out_cl)], axis=0).reshape(n, 1, half)
    zk = concat([proj.z_k_te(out_te), proj.z_k_cl(out_cl)], axis=0).reshape(n, 1, half)
    return concat([Q, zq], axis=1), concat([K, zk], axis=1)


def build_relation_resource(
    Q: Tensor, K: Tensor, out_te: Tensor, out_cl: Tensor, proj: RelationProjections
) -> RelationResource:
    """Pairwise concatenation over all ``(i, j)`` pairs: ``r`` is ``[N, N, L+1, d]``."""
    qf, kf = relation_features(Q, K, out_te, out_cl, proj)
    n, s, half = qf.shape
    rows = qf.reshape(n, 1, s, half).broadcast_to(n, n, s, half)
    cols = kf.reshape(1, n, s, half).broadcast_to(n, n, s, half)
    return RelationResource(r=concat([rows, cols], axis=-1), n_te=out_te.shape[0], n_cl=out_cl.shape[0])


def select_task_slices(res: RelationResource) -> Tuple[Tensor, Tensor]:
    """``r_tecl`` = TE rows x CL columns, ``r_clcl`` = CL rows x CL columns."""
    t = res.n_te
    return res.r[:t, t:], res.r[t:, t:]
