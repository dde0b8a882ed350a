"""
Dual dependency interaction.

The mixed (C, L) matrix is cut into N = L/P patches. Patch 0 passes through;
every later patch adds a time-mix of the previous output patch, then a
beta-scaled channel-mix of itself:

    Z_p = U_p + FF_time(V_{p-1})
    V_p = Z_p + beta * FF_chan(Z_p^T)^T
"""

import logging
import math
from typing import List, Optional

import numpy as np

from src.autograd import Tensor, functions as F
from src.exceptions import ShapeError
from src.model.layers import FeedForward, ParameterRegistry

logger = logging.getLogger(__name__)


def compute_d_model(C: int) -> int:
    """max(32, 2**round(log2 C))."""
    if C < 1:
        raise ShapeError(f"channel count must be >= 1, got {C}")
    return max(32, 2 ** int(round(math.log2(C))))


def patchify(U: Tensor, P: int) -> Tensor:
    """(..., C, L) -> (..., C, N, P)."""
    L = U.shape[-1]
    if P < 1 or L % P != 0:
        raise ShapeError(f"length L={L} is not divisible by patch length P={P}")
    return F.reshape(U, U.shape[:-1] + (L // P, P))


def unpatchify(U_hat: Tensor) -> Tensor:
    """(..., C, N, P) -> (..., C, N*P)."""
    if U_hat.ndim < 3:
        raise ShapeError(f"unpatchify needs (..., C, N, P), got {U_hat.shape}")
    N, P = U_hat.shape[-2:]
    return F.reshape(U_hat, U_hat.shape[:-2] + (N * P,))


class DDIBlock:
    def __init__(self, registry: ParameterRegistry, prefix: str, seq_len: int, channels: int,
                 patch_len: int, beta: float = 0.1, layer_norm: bool = True,
                 d_model: Optional[int] = None, depth: int = 2,
                 rng: Optional[np.random.Generator] = None):
        if seq_len % patch_len != 0:
            raise ShapeError(f"length L={seq_len} is not divisible by patch length P={patch_len}")
        self.seq_len, self.channels, self.patch_len = seq_len, channels, patch_len
        self.beta = float(beta)
        self.use_layer_norm = layer_norm
        self.d_model = d_model or compute_d_model(channels)
        self.ln_weight = self.ln_bias = None
        if layer_norm:
            self.ln_weight = registry.register(f"{prefix}.norm.weight", np.ones(seq_len))
            self.ln_bias = registry.register(f"{prefix}.norm.bias", np.zeros(seq_len))
        self.time_mix = FeedForward(registry, f"{prefix}.time_mix", patch_len, patch_len,
                                    hidden=self.d_model, depth=depth, rng=rng)
        self.channel_mix = FeedForward(registry, f"{prefix}.channel_mix", channels, channels,
                                       hidden=self.d_model, depth=depth, rng=rng)

    def __call__(self, U: Tensor) -> Tensor:
        return ddi_block_forward(U, self)

    def zero_(self) -> None:
        self.time_mix.zero_()
        self.channel_mix.zero_()


def ddi_block_forward(U: Tensor, params: DDIBlock) -> Tensor:
    """U: (..., C, L) -> V: (..., C, L)."""
    if U.ndim < 2 or U.shape[-2:] != (params.channels, params.seq_len):
        raise ShapeError(f"DDI block expects (..., {params.channels}, {params.seq_len}), got {U.shape}")
    if params.use_layer_norm:
        U = F.layer_norm(U, params.ln_weight, params.ln_bias)

    U_hat = patchify(U, params.patch_len)
    N = U_hat.shape[-2]
    v_prev = F.slice_(U_hat, (Ellipsis, 0, slice(None)))
    patches = [v_prev]
    for p in range(1, N):
        z = F.add(F.slice_(U_hat, (Ellipsis, p, slice(None))), params.time_mix(v_prev))
        mixed = F.transpose(params.channel_mix(F.transpose(z)))
        v_prev = F.add(z, F.scale(mixed, params.beta))
        patches.append(v_prev)

    stacked = F.concat([F.reshape(v, v.shape[:-1] + (1, v.shape[-1])) for v in patches], axis=-2)
    return unpatchify(stacked)


class DDI:
    """n stacked blocks; the output of one block is the input of the next."""

    def __init__(self, registry: ParameterRegistry, seq_len: int, channels: int, patch_len: int,
                 num_blocks: int = 1, beta: float = 0.1, layer_norm: bool = True,
                 d_model: Optional[int] = None, depth: int = 2,
                 rng: Optional[np.random.Generator] = None, prefix: str = "ddi"):
        self.blocks: List[DDIBlock] = [
            DDIBlock(registry, f"{prefix}.{j}", seq_len, channels, patch_len, beta=beta,
                     layer_norm=layer_norm, d_model=d_model, depth=depth, rng=rng)
            for j in range(num_blocks)
        ]

    def __call__(self, U: Tensor) -> Tensor:
        for block in self.blocks:
            U = block(U)
        return U
