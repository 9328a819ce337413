"""core.gradcheck

Central finite-difference verification of analytic gradients.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from core.logger import get_logger
from core.tensor import Tensor, no_grad

logger = get_logger("gradcheck")

REL_FLOOR = 1e-4


def relative_error(analytic: float, numeric: float, floor: float = REL_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numeric_gradient(fn: Callable[[], Tensor], param: Tensor, index: Tuple[int, ...], h: float = 1e-5) -> float:
    """Central difference of scalar ``fn()`` wrt ``param[index]``."""
    original = param.data
    values = []
    for sign in (1.0, -1.0):
        bumped = np.array(original)
        bumped[index] += sign * h
        param.assign(bumped)
        with no_grad():
            values.append(fn().item())
    param.data = original
    return (values[0] - values[1]) / (2.0 * h)


@dataclass
class GradCheckResult:
    max_rel_error: float = 0.0
    worst: Optional[Tuple[str, Tuple[int, ...]]] = None
    checked: int = 0
    per_param: Dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return self.max_rel_error < tol


def check_gradients(
    fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-5,
    entries_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> GradCheckResult:
    """Compare ``backward()`` gradients of ``fn()`` with central differences.

    Args:
        fn: Builds the scalar loss from the current parameter values
        params: Named tensors to check
        h: Finite-difference step
        entries_per_param: When set, sample this many coordinates per tensor
        rng: Generator used for sampling coordinates
    """
    rng = rng or np.random.default_rng(0)
    for p in params.values():
        p.zero_grad()
    fn().backward()
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else np.array(p.grad)) for name, p in params.items()}

    result = GradCheckResult()
    for name, p in params.items():
        indices: List[Tuple[int, ...]] = [tuple(ix) for ix in np.ndindex(*p.shape)]
        if entries_per_param is not None and len(indices) > entries_per_param:
            pick = rng.choice(len(indices), size=entries_per_param, replace=False)
            indices = [indices[i] for i in sorted(pick)]
        worst = 0.0
        for index in indices:
            num = numeric_gradient(fn, p, index, h)
            err = relative_error(float(analytic[name][index]), num)
            result.checked += 1
            if err > worst:
                worst = err
            if err > result.max_rel_error:
                result.max_rel_error = err
                result.worst = (name, index)
        result.per_param[name] = worst
    logger.debug(f"Checked {result.checked} coordinates, max rel err {result.max_rel_error:.3e} at {result.worst}")
    return result
