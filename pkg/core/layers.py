"""core.layers

Parameterized building blocks shared by the decoders, relation heads and the
SD-map encoder. Every constructor takes an explicit ``numpy.random.Generator``
so a seed fully determines initialization.
"""

import math
from typing import Optional, Sequence

import numpy as np

from core.errors import DimensionError
from core.functional import linear
from core.module import BaseModule, ModuleList, Parameter
from core.tensor import Tensor, layer_norm


class Linear(BaseModule):
    """Affine map with Xavier-uniform weight ``[d_in, d_out]`` and zero bias."""

    name = "linear"

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        limit = math.sqrt(6.0 / (d_in + d_out))
        self.weight = Parameter(rng.uniform(-limit, limit, size=(d_in, d_out)))
        self.bias = Parameter(np.zeros(d_out)) if bias else None

    @property
    def d_in(self) -> int:
        return self.weight.shape[0]

    @property
    def d_out(self) -> int:
        return self.weight.shape[1]

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise DimensionError("linear", x.shape, self.weight.shape)
        return linear(x, self.weight, self.bias)


class LayerNorm(BaseModule):
    name = "layer_norm"

    def __init__(self, d: int, eps: float = 1e-5):
        super().__init__()
        self.gain = Parameter(np.ones(d))
        self.bias = Parameter(np.zeros(d))
        self._eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self._eps)


class Embedding(BaseModule):
    """Lookup table initialized from N(0, std^2)."""

    name = "embedding"

    def __init__(self, num: int, d: int, rng: np.random.Generator, std: float = 0.02):
        super().__init__()
        self.weight = Parameter(rng.normal(0.0, std, size=(num, d)))

    def forward(self, index=None) -> Tensor:
        if index is None:
            return self.weight[:]
        return self.weight[np.asarray(index, dtype=np.int64)]


_ACTIVATIONS = {
    "relu": Tensor.relu,
    "gelu": Tensor.gelu,
    "tanh": Tensor.tanh,
}


class MLP(BaseModule):
    """Stack of `Linear` layers with an activation between consecutive layers."""

    name = "mlp"

    def __init__(self, dims: Sequence[int], rng: np.random.Generator, activation: str = "relu"):
        super().__init__()
        if len(dims) < 2:
            raise DimensionError("mlp", tuple(dims))
        self.layers = ModuleList(Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:]))
        self._act = _ACTIVATIONS[activation]

    def forward(self, x: Tensor, final_activation: Optional[str] = None) -> Tensor:
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < last:
                x = self._act(x)
        if final_activation:
            x = _ACTIVATIONS[final_activation](x)
        return x
