"""core.functional

Composite operations built from `core.tensor` primitives: affine maps, losses,
same-size convolution with edge replication and adaptive average pooling.

Feature maps here are channel-last ``[H, W, C]``.
"""

import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from core.errors import DimensionError
from core.tensor import Tensor, concat


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Row-vector affine map ``x @ weight + bias`` over the last axis."""
    y = x @ weight
    if bias is not None:
        y = y + bias
    return y


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise DimensionError("mse_loss", pred.shape, target.shape)
    return (pred - target).square().mean()


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.shape != target.shape:
        raise DimensionError("l1_loss", pred.shape, target.shape)
    return (pred - target).abs().mean()


def pad_edge_2d(x: Tensor, pad: int) -> Tensor:
    """Replicate the border rows/columns of ``[H, W, C]`` ``pad`` times."""
    if pad == 0:
        return x
    h, w = x.shape[0], x.shape[1]
    top = [x[0:1]] * pad
    bottom = [x[h - 1 : h]] * pad
    x = concat(top + [x] + bottom, axis=0)
    left = [x[:, 0:1]] * pad
    right = [x[:, w - 1 : w]] * pad
    return concat(left + [x] + right, axis=1)


def conv2d_same(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Stride-1 convolution keeping ``H x W``.

    Args:
        x: ``[H, W, C_in]``
        weight: ``[k, k, C_in, C_out]`` with odd ``k``
        bias: ``[C_out]``
    """
    if x.ndim != 3 or weight.ndim != 4 or weight.shape[0] != weight.shape[1] or weight.shape[2] != x.shape[2]:
        raise DimensionError("conv2d_same", x.shape, weight.shape)
    k = weight.shape[0]
    if k % 2 == 0:
        raise DimensionError("conv2d_same", weight.shape)
    h, w = x.shape[0], x.shape[1]
    xp = pad_edge_2d(x, k // 2)
    out = None
    for di in range(k):
        for dj in range(k):
            term = xp[di : di + h, dj : dj + w] @ weight[di, dj]
            out = term if out is None else out + term
    if bias is not None:
        out = out + bias
    return out


@lru_cache(maxsize=64)
def adaptive_pool_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Averaging matrix ``[n_out, n_in]``; window ``a`` spans floor(a*n/m) .. ceil((a+1)*n/m)."""
    m = np.zeros((n_out, n_in))
    for a in range(n_out):
        start = (a * n_in) // n_out
        end = math.ceil((a + 1) * n_in / n_out)
        m[a, start:end] = 1.0 / (end - start)
    m.flags.writeable = False
    return m


def adaptive_avg_pool2d(x: Tensor, out_hw: Tuple[int, int]) -> Tensor:
    """Average-pool ``[H, W, C]`` to ``[oh, ow, C]``."""
    if x.ndim != 3:
        raise DimensionError("adaptive_avg_pool2d", x.shape)
    h, w, c = x.shape
    oh, ow = out_hw
    ph = Tensor(adaptive_pool_matrix(h, oh), dtype=x.dtype)
    pw = Tensor(adaptive_pool_matrix(w, ow), dtype=x.dtype)
    y = (ph @ x.reshape(h, w * c)).reshape(oh, w, c)
    y = y.transpose(1, 0, 2).reshape(w, oh * c)
    y = (pw @ y).reshape(ow, oh, c)
    return y.transpose(1, 0, 2)
