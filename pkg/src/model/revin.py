"""
Reversible instance normalization.

norm: per window and channel, subtract the mean over time and divide by the
population std (floored at eps), then apply the optional affine map.
denorm: invert the affine map and restore the cached statistics.

Statistics stay in the graph, so gradients flow through them.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.autograd import Tensor, functions as F
from src.exceptions import ShapeError
from src.model.layers import ParameterRegistry

REVIN_EPS = 1e-5


@dataclass
class RevinState:
    affine_scale: Optional[Tensor] = None
    affine_bias: Optional[Tensor] = None
    eps: float = REVIN_EPS
    mean: Optional[Tensor] = None
    std: Optional[Tensor] = None


def revin_norm(x: Tensor, state: RevinState) -> Tensor:
    """x: (..., L, C). Caches mean/std of shape (..., 1, C) in state."""
    if x.ndim < 2 or x.shape[-2] < 1:
        raise ShapeError(f"revin_norm needs (..., L>=1, C) input, got {x.shape}")
    mean = F.mean(x, axis=-2, keepdims=True)
    var = F.var(x, axis=-2, keepdims=True)
    std = F.sqrt(F.clip_min(var, state.eps * state.eps))
    state.mean, state.std = mean, std

    out = F.div(F.sub(x, mean), std)
    if state.affine_scale is not None:
        out = F.add(F.mul(out, state.affine_scale), state.affine_bias)
    return out


def revin_denorm(y: Tensor, state: RevinState) -> Tensor:
    """y: (..., T, C) -> (y - bias) / scale * std + mean."""
    if state.mean is None or state.std is None:
        raise ShapeError("revin_denorm called before revin_norm: no cached statistics")
    if state.affine_scale is not None:
        y = F.div(F.sub(y, state.affine_bias), state.affine_scale)
    return F.add(F.mul(y, state.std), state.mean)


class RevIN:
    """Owns the learnable affine parameters; hands out a fresh RevinState per forward."""

    def __init__(self, registry: ParameterRegistry, channels: int, affine: bool = True,
                 eps: float = REVIN_EPS, prefix: str = "revin"):
        self.eps = eps
        self.affine_weight = self.affine_bias = None
        if affine:
            self.affine_weight = registry.register(f"{prefix}.affine_weight", np.ones(channels))
            self.affine_bias = registry.register(f"{prefix}.affine_bias", np.zeros(channels))

    def new_state(self) -> RevinState:
        return RevinState(affine_scale=self.affine_weight, affine_bias=self.affine_bias, eps=self.eps)

    def norm(self, x: Tensor, state: Optional[RevinState] = None):
        state = state or self.new_state()
        return revin_norm(x, state), state

    def denorm(self, y: Tensor, state: RevinState) -> Tensor:
        return revin_denorm(y, state)
