"""
Multi-scale decomposable mixing.

Each channel is viewed at num_scales resolutions by repeated average pooling
(tau_0 = raw input, tau_i = pool(tau_{i-1}, d)). Mixing runs coarse to fine:
xi_top = tau_top, xi_i = tau_i + mix_i(xi_{i+1}), output xi_0.
"""

import logging
from typing import List, Optional

import numpy as np

from src.autograd import Tensor, functions as F
from src.exceptions import ShapeError
from src.model.layers import FeedForward, ParameterRegistry

logger = logging.getLogger(__name__)


def avg_downsample(tau: Tensor, d: int) -> Tensor:
    """Block means of d consecutive entries over the last axis; remainder dropped."""
    return F.avg_pool1d(tau, d)


def scale_lengths(L: int, num_scales: int, d: int) -> List[int]:
    return [L // d ** i for i in range(num_scales)]


class MDM:
    """
    Mixing layers shared across channels. `mix[i]` maps scale i+1 to scale i.

    linear=True uses one linear layer per step (no activation); otherwise two
    layers with GELU and hidden width equal to the target length.
    """

    def __init__(self, registry: ParameterRegistry, seq_len: int, num_scales: int = 4, rate: int = 2,
                 linear: bool = False, rng: Optional[np.random.Generator] = None, prefix: str = "mdm"):
        if num_scales < 1 or rate < 1:
            raise ShapeError(f"num_scales and rate must be positive, got {num_scales}, {rate}")
        self.seq_len, self.num_scales, self.rate, self.linear = seq_len, num_scales, rate, linear
        lengths = scale_lengths(seq_len, num_scales, rate)
        if lengths[-1] < 1:
            raise ShapeError(f"seq_len {seq_len} too short for {num_scales} scales at rate {rate}: "
                             f"need at least {rate ** (num_scales - 1)}")
        self.lengths = lengths
        self.mix: List[FeedForward] = [
            FeedForward(registry, f"{prefix}.mix.{i}", lengths[i + 1], lengths[i],
                        hidden=lengths[i], depth=1 if linear else 2, rng=rng)
            for i in range(num_scales - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        return mdm_forward(x, self)

    def zero_(self) -> None:
        for ff in self.mix:
            ff.zero_()


def mdm_forward(x: Tensor, params: MDM) -> Tensor:
    """x: (..., L) -> (..., L)."""
    L = x.shape[-1]
    minimum = params.rate ** (params.num_scales - 1)
    if L < minimum:
        raise ShapeError(f"mdm_forward needs length >= {minimum} (rate {params.rate}, "
                         f"{params.num_scales} scales), got {L}")
    if L != params.seq_len:
        raise ShapeError(f"MDM built for length {params.seq_len}, got {L}")

    taus = [x]
    for _ in range(params.num_scales - 1):
        taus.append(avg_downsample(taus[-1], params.rate))

    xi = taus[-1]
    for i in range(params.num_scales - 2, -1, -1):
        xi = F.add(taus[i], params.mix[i](xi))
    return xi
