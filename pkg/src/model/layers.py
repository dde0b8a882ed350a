"""
Parameter registry and the feedforward stack every block is built from.
"""

import logging
import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.autograd import Tensor, functions as F
from src.exceptions import ConfigError, ShapeError

logger = logging.getLogger(__name__)


class ParameterRegistry:
    """
    Ordered name -> Tensor map. Every trainable tensor of a model is
    registered exactly once under a unique dotted name.
    """

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def register(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ConfigError(f"Parameter '{name}' registered twice")
        tensor = Tensor(data, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(self._params.items())

    def num_parameters(self) -> int:
        return int(sum(t.size for t in self._params.values()))

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        missing = sorted(set(self._params) - set(state))
        extra = sorted(set(state) - set(self._params))
        if missing or extra:
            raise ShapeError(f"Parameter set mismatch: missing {missing}, unexpected {extra}")
        for name, t in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != t.shape:
                raise ShapeError(f"Parameter '{name}' has shape {t.shape}, got {value.shape}")
            t.data = value.copy()


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    """Kaiming-uniform as in torch.nn.Linear: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class FeedForward:
    """
    depth 1: x @ W + b
    depth 2: gelu(x @ W1 + b1) @ W2 + b2

    Acts on the last axis; leading axes are batch axes.
    """

    def __init__(
        self,
        registry: ParameterRegistry,
        prefix: str,
        in_dim: int,
        out_dim: int,
        hidden: Optional[int] = None,
        depth: int = 2,
        rng: Optional[np.random.Generator] = None,
    ):
        if depth not in (1, 2):
            raise ConfigError(f"FeedForward depth must be 1 or 2, got {depth}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim, self.out_dim, self.depth = in_dim, out_dim, depth
        self.layers: List[Tuple[Tensor, Tensor]] = []
        dims = [in_dim, out_dim] if depth == 1 else [in_dim, hidden or out_dim, out_dim]
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            w = registry.register(f"{prefix}.w{i}", uniform_init(rng, a, (a, b)))
            bias = registry.register(f"{prefix}.b{i}", uniform_init(rng, a, (b,)))
            self.layers.append((w, bias))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"FeedForward expects last axis {self.in_dim}, got shape {x.shape}")
        for i, (w, b) in enumerate(self.layers):
            x = F.add(F.matmul(x, w), b)
            if i < len(self.layers) - 1:
                x = F.gelu(x)
        return x

    def parameters(self) -> List[Tensor]:
        return [t for layer in self.layers for t in layer]

    def zero_(self) -> None:
        for t in self.parameters():
            t.data[...] = 0.0
