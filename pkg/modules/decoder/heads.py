"""Detection heads on top of the decoder embeddings."""

from typing import Tuple

import numpy as np

from core.layers import MLP, Linear
from core.module import BaseModule
from core.tensor import Tensor


class TEHead(BaseModule):
    """Class logits ``[N, C+1]`` (last column = no object) and sigmoid boxes ``[N, 4]`` as (cx, cy, w, h)."""

    name = "te_head"

    def __init__(self, d: int, c_te: int, rng: np.random.Generator):
        super().__init__()
        self.cls = Linear(d, c_te + 1, rng)
        self.box = MLP([d, d, 4], rng)

    def forward(self, emb: Tensor) -> Tuple[Tensor, Tensor]:
        return self.cls(emb), self.box(emb).sigmoid()


class CLHead(BaseModule):
    """Foreground logits ``[N]`` and ordered points ``[N, P, 2]`` in normalized ``[0, 1]^2``."""

    name = "cl_head"

    def __init__(self, d: int, points: int, rng: np.random.Generator):
        super().__init__()
        self.fg = Linear(d, 1, rng)
        self.pts = MLP([d, d, 2 * points], rng)
        self._points = points

    def forward(self, emb: Tensor) -> Tuple[Tensor, Tensor]:
        n = emb.shape[0]
        fg = self.fg(emb).reshape(n)
        pts = self.pts(emb).sigmoid().reshape(n, self._points, 2)
        return fg, pts


def te_head(emb: Tensor, head: TEHead) -> Tuple[Tensor, Tensor]:
    return head(emb)


def cl_head(emb: Tensor, head: CLHead) -> Tuple[Tensor, Tensor]:
    return head(emb)


def denormalize_points(points: np.ndarray, extent: float) -> np.ndarray:
    """Map normalized ``[0, 1]`` coordinates onto ``[-extent, extent]`` meters."""
    return (np.asarray(points) * 2.0 - 1.0) * extent


def normalize_points(points: np.ndarray, extent: float) -> np.ndarray:
    return (np.asarray(points) / extent + 1.0) / 2.0
