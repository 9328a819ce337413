"""Discrete Fréchet distance between ordered polylines."""

import numpy as np
from scipy.spatial.distance import cdist

from core.errors import DimensionError


def frechet(p, q) -> float:
    """Coupling distance by dynamic programming over the pointwise distance matrix.

    Raises:
        DimensionError: either polyline is empty or not ``[n, 2]``
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim != 2 or q.ndim != 2 or len(p) == 0 or len(q) == 0 or p.shape[1] != q.shape[1]:
        raise DimensionError("frechet", p.shape, q.shape)
    d = cdist(p, q)
    n, m = d.shape
    ca = np.empty((n, m))
    ca[:, 0] = np.maximum.accumulate(d[:, 0])
    ca[0, :] = np.maximum.accumulate(d[0, :])
    for i in range(1, n):
        for j in range(1, m):
            ca[i, j] = max(min(ca[i - 1, j], ca[i - 1, j - 1], ca[i, j - 1]), d[i, j])
    return float(ca[-1, -1])


def frechet_matrix(preds, gts) -> np.ndarray:
    """Pairwise distances ``[len(preds), len(gts)]``."""
    out = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            out[i, j] = frechet(p, g)
    return out
