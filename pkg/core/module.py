from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from core.errors import CheckpointError
from core.tensor import Tensor


class Parameter(Tensor):
    """Leaf tensor that always requires gradients."""

    def __init__(self, data, dtype=None, name: str = None):
        super().__init__(data, requires_grad=True, dtype=dtype, name=name)


class ModuleList(list):
    """Ordered container of child modules; indices become name segments."""


class BaseModule(ABC):
    """Base class for toporeuse network modules.

    Modules should subclass this and implement `forward`. Parameters, child
    modules and `ModuleList`s assigned as public attributes are discovered in
    assignment order, so parameter names are stable across runs.
    """

    name: str = ""
    description: str = ""

    def __init__(self, **kwargs: Any):
        self._opts = kwargs

    @abstractmethod
    def forward(self, *args, **kwargs) -> Any:
        """Run the module on tensors and return tensors."""
        pass

    def __call__(self, *args, **kwargs) -> Any:
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            full = f"{prefix}{key}"
            if isinstance(value, Parameter):
                yield full, value
            elif isinstance(value, BaseModule):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, ModuleList):
                for i, child in enumerate(value):
                    yield from child.named_parameters(f"{full}.{i}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def requires_grad_(self, flag: bool) -> "BaseModule":
        for p in self.parameters():
            p.requires_grad = flag
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: np.array(p.data) for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        """Copy arrays into parameters by name.

        Raises:
            CheckpointError: on missing/unexpected names (strict) or shape mismatch
        """
        own = dict(self.named_parameters())
        if strict:
            missing = [k for k in own if k not in state]
            unexpected = [k for k in state if k not in own]
            if missing or unexpected:
                raise CheckpointError(None, f"parameter mismatch: missing={missing[:5]} unexpected={unexpected[:5]}")
        for key, p in own.items():
            if key not in state:
                continue
            arr = np.asarray(state[key])
            if arr.shape != p.shape:
                raise CheckpointError(None, f"shape mismatch for '{key}': {list(arr.shape)} vs {list(p.shape)}")
            p.assign(arr)
