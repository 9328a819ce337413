"""Minimum-cost bipartite assignment between predictions and ground truth."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.errors import DimensionError, NonFiniteError


@dataclass
class Assignment:
    """Matched ``(pred_index, gt_index)`` pairs sorted by prediction index."""

    pairs: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_pred: List[int] = field(default_factory=list)
    n_pred: int = 0
    n_gt: int = 0
    cost: float = 0.0

    def pred_to_gt(self) -> Dict[int, int]:
        return dict(self.pairs)

    def gt_to_pred(self) -> Dict[int, int]:
        return {g: p for p, g in self.pairs}

    @property
    def unmatched_gt(self) -> List[int]:
        hit = {g for _, g in self.pairs}
        return [g for g in range(self.n_gt) if g not in hit]

    @classmethod
    def identity(cls, n_pred: int, n_gt: int) -> "Assignment":
        k = min(n_pred, n_gt)
        return cls(pairs=[(i, i) for i in range(k)], unmatched_pred=list(range(k, n_pred)), n_pred=n_pred, n_gt=n_gt)


def hungarian(cost) -> Assignment:
    """Solve the rectangular assignment problem on ``cost [n, m]``.

    Among equal-cost predictions the lower index wins: row ``i`` is perturbed
    by ``i * eps`` with ``eps`` far below any cost difference.

    Raises:
        DimensionError: cost is not a matrix
        NonFiniteError: cost holds NaN or inf
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise DimensionError("hungarian", c.shape)
    n, m = c.shape
    if not np.all(np.isfinite(c)):
        raise NonFiniteError("hungarian")
    if n == 0 or m == 0:
        return Assignment(unmatched_pred=list(range(n)), n_pred=n, n_gt=m)
    eps = 1e-12 * (1.0 + float(np.abs(c).max())) / (n + 1)
    rows, cols = linear_sum_assignment(c + eps * np.arange(n, dtype=float)[:, None])
    order = np.argsort(rows)
    pairs = [(int(rows[k]), int(cols[k])) for k in order]
    matched = {p for p, _ in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_pred=[i for i in range(n) if i not in matched],
        n_pred=n,
        n_gt=m,
        cost=float(c[rows, cols].sum()),
    )
