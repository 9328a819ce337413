"""core.optim

AdamW with optional global-norm gradient clipping. Optimizer state is keyed
by parameter name so it can be checkpointed next to the weights and a resumed
run continues bit-exactly.
"""

import math
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from core.errors import CheckpointError
from core.logger import get_logger
from core.module import Parameter

logger = get_logger("optim")


class AdamW:
    def __init__(
        self,
        named_params: Iterable[Tuple[str, Parameter]],
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        clip_norm: Optional[float] = 35.0,
    ):
        self.params: Dict[str, Parameter] = dict(named_params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.clip_norm = clip_norm
        self.t = 0
        self.m: Dict[str, np.ndarray] = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v: Dict[str, np.ndarray] = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def grad_norm(self) -> float:
        total = 0.0
        for p in self.params.values():
            if p.grad is not None:
                total += float(np.sum(p.grad * p.grad))
        return math.sqrt(total)

    def step(self) -> float:
        """Apply one update; returns the pre-clip global gradient norm."""
        norm = self.grad_norm()
        scale = 1.0
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / (norm + 1e-12)
            logger.debug(f"Clipping gradient norm {norm:.3f} -> {self.clip_norm}")

        self.t += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for key, p in self.params.items():
            g = np.zeros_like(p.data) if p.grad is None else p.grad * scale
            self.m[key] = b1 * self.m[key] + (1.0 - b1) * g
            self.v[key] = b2 * self.v[key] + (1.0 - b2) * g * g
            update = (self.m[key] / bc1) / (np.sqrt(self.v[key] / bc2) + self.eps)
            p.assign(p.data * (1.0 - self.lr * self.weight_decay) - self.lr * update)
        return norm

    def state_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "lr": self.lr,
            "m": {k: np.array(v) for k, v in self.m.items()},
            "v": {k: np.array(v) for k, v in self.v.items()},
        }

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        if set(state.get("m", {})) != set(self.params):
            raise CheckpointError(None, "optimizer state does not match model parameters")
        self.t = int(state["t"])
        self.lr = float(state.get("lr", self.lr))
        self.m = {k: np.asarray(state["m"][k], dtype=self.params[k].dtype) for k in self.params}
        self.v = {k: np.asarray(state["v"][k], dtype=self.params[k].dtype) for k in self.params}
