"""Focal binary cross-entropy on logits."""

import numpy as np

from core.errors import ConfigError, DimensionError
from core.tensor import Tensor


def focal_bce(logits: Tensor, targets, alpha: float = 0.25, gamma: float = 2.0) -> Tensor:
    """Mean of ``alpha_t * (1 - p_t)^gamma * BCE`` over all entries.

    ``BCE = softplus(x) - t * x`` keeps large logits finite.

    Raises:
        ConfigError: ``alpha`` outside (0, 1) or negative ``gamma``
        DimensionError: target shape differs from logits
    """
    if not 0.0 < alpha < 1.0 or gamma < 0.0:
        raise ConfigError(f"focal loss needs 0 < alpha < 1 and gamma >= 0, got {alpha}, {gamma}", key="loss")
    t = np.asarray(targets.numpy() if isinstance(targets, Tensor) else targets, dtype=logits.dtype)
    if t.shape != logits.shape:
        raise DimensionError("focal_bce", logits.shape, t.shape)
    if logits.size == 0:
        return Tensor(0.0, dtype=logits.dtype)
    tt = Tensor(t, dtype=logits.dtype)
    ce = logits.softplus() - logits * tt
    p = logits.sigmoid()
    p_t = p * tt + (1.0 - p) * (1.0 - tt)
    alpha_t = Tensor(alpha * t + (1.0 - alpha) * (1.0 - t), dtype=logits.dtype)
    if gamma == 0.0:
        return (alpha_t * ce).mean()
    return (alpha_t * (1.0 - p_t).pow(gamma) * ce).mean()
