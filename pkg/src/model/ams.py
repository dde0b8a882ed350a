"""
Adaptive multi-predictor synthesis.

The selector turns the MDM output u of each channel into a gate S on the
m-simplex (noisy gating, piecewise top-k scaling, double softmax). The m
predictors each map the DDI output v to a length-T forecast; the gate mixes
them.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from src.autograd import Tensor, as_tensor, functions as F
from src.exceptions import ConfigError, ShapeError
from src.model.config import AMS_MODES
from src.model.layers import FeedForward, ParameterRegistry, uniform_init

logger = logging.getLogger(__name__)


def topk_scale(u, k: int, alpha: float) -> Tensor:
    """
    Entries at or above the k-th largest value v_k map to alpha*exp(u) - 1,
    the rest to alpha*log(u + 1). Applied row-wise over the last axis.
    The branch mask is a constant; gradients flow through the values only.
    """
    u = as_tensor(u)
    m = u.shape[-1]
    if not 1 <= k <= m:
        raise ConfigError(f"top-k needs 1 <= k <= {m}, got k={k}")
    v_k = np.sort(u.data, axis=-1)[..., m - k:m - k + 1]
    top = (u.data >= v_k).astype(np.float64)
    exp_branch = F.sub(F.scale(F.exp(u), alpha), 1.0)
    log_branch = F.scale(F.log(F.add(u, 1.0)), alpha)
    return F.add(F.mul(exp_branch, top), F.mul(log_branch, 1.0 - top))


class TPSelector:
    def __init__(self, registry: ParameterRegistry, seq_len: int, num_predictors: int,
                 top_k: int, alpha: float, hidden: int = 128, noise: bool = True,
                 rng: Optional[np.random.Generator] = None, prefix: str = "ams.selector"):
        if not 1 <= top_k <= num_predictors:
            raise ConfigError(f"top_k must satisfy 1 <= k <= m, got k={top_k}, m={num_predictors}")
        self.num_predictors, self.top_k, self.alpha = num_predictors, top_k, float(alpha)
        self.noise_enabled = noise
        self.decomp = FeedForward(registry, f"{prefix}.decomp", seq_len, num_predictors,
                                  hidden=hidden, depth=2, rng=rng)
        self.w_noise = registry.register(f"{prefix}.w_noise", np.zeros((num_predictors, num_predictors)))

    def __call__(self, u: Tensor, rng: Optional[np.random.Generator] = None, training: bool = False) -> Tensor:
        return selector_forward(u, self, rng=rng, training=training)


def selector_forward(u: Tensor, params: TPSelector, rng: Optional[np.random.Generator] = None,
                     training: bool = True) -> Tensor:
    """
    u: (..., L) -> S: (..., m) on the simplex.

    Q = D(u) + psi * softplus(D(u) @ W_noise) with psi ~ N(0, 1) from `rng`,
    only when noise is enabled and training; otherwise Q = D(u).
    S = softmax(topk_scale(softmax(Q))).
    """
    q = params.decomp(u)
    if params.noise_enabled and training:
        if rng is None:
            raise ConfigError("noisy gating needs an explicit rng while training")
        psi = rng.standard_normal(q.shape)
        q = F.add(q, F.mul(F.softplus(F.matmul(q, params.w_noise)), psi))
    return F.softmax(topk_scale(F.softmax(q), params.top_k, params.alpha))


class TPProjection:
    """m predictors L -> hidden -> T, stored as stacked (m, ...) parameters."""

    def __init__(self, registry: ParameterRegistry, seq_len: int, pred_len: int, num_predictors: int,
                 hidden: int = 2048, rng: Optional[np.random.Generator] = None,
                 prefix: str = "ams.predictors"):
        rng = rng if rng is not None else np.random.default_rng(0)
        m = num_predictors
        self.num_predictors, self.seq_len, self.pred_len = m, seq_len, pred_len
        self.w1 = registry.register(f"{prefix}.w0", np.stack([uniform_init(rng, seq_len, (seq_len, hidden)) for _ in range(m)]))
        self.b1 = registry.register(f"{prefix}.b0", np.stack([uniform_init(rng, seq_len, (1, hidden)) for _ in range(m)]))
        self.w2 = registry.register(f"{prefix}.w1", np.stack([uniform_init(rng, hidden, (hidden, pred_len)) for _ in range(m)]))
        self.b2 = registry.register(f"{prefix}.b1", np.stack([uniform_init(rng, hidden, (1, pred_len)) for _ in range(m)]))

    def __call__(self, v: Tensor) -> Tensor:
        """v: (..., L) -> (m, N, T) with N the product of the leading axes."""
        if v.shape[-1] != self.seq_len:
            raise ShapeError(f"predictors expect last axis {self.seq_len}, got {v.shape}")
        n = int(np.prod(v.shape[:-1]))
        rows = F.reshape(v, (1, n, self.seq_len))
        hidden = F.gelu(F.add(F.matmul(rows, self.w1), self.b1))
        return F.add(F.matmul(hidden, self.w2), self.b2)

    def zero_(self) -> None:
        for t in (self.w1, self.b1, self.w2, self.b2):
            t.data[...] = 0.0


def ams_forward(u: Tensor, v: Tensor, sel: TPSelector, proj: TPProjection, mode: str = 'dense',
                rng: Optional[np.random.Generator] = None, training: bool = False) -> Tuple[Tensor, Tensor]:
    """
    u, v: (..., L) -> (y_hat (..., T), S (..., m)).

    dense:   y_hat = sum_j S_j * pred_j
    sparse:  only the top-k S_j, renormalized to sum 1; S reported the same way
    average: S = 1/m for every predictor
    """
    if mode not in AMS_MODES:
        raise ConfigError(f"Unknown AMS mode '{mode}' (expected one of {', '.join(AMS_MODES)})")
    u, v = as_tensor(u), as_tensor(v)
    lead = u.shape[:-1]
    m = proj.num_predictors
    n = int(np.prod(lead))

    if mode == 'average':
        S = Tensor(np.full(lead + (m,), 1.0 / m))
    else:
        S = selector_forward(u, sel, rng=rng, training=training)

    preds = proj(v)                                             # (m, n, T)
    gate = F.reshape(F.transpose(F.reshape(S, (n, m))), (m, n, 1))

    if mode == 'sparse':
        k = sel.top_k
        order = np.argsort(-S.data.reshape(n, m), axis=-1, kind='stable')[:, :k]   # (n, k)
        idx = order.T[:, :, None]                                                 # (k, n, 1)
        top_gate = F.gather(gate, idx, axis=0)
        top_gate = F.div(top_gate, F.sum_(top_gate, axis=0, keepdims=True))
        y = F.sum_(F.mul(F.gather(preds, idx, axis=0), top_gate), axis=0)

        mask = np.zeros((n, m))
        np.put_along_axis(mask, order, 1.0, axis=-1)
        kept = F.mul(S, mask.reshape(lead + (m,)))
        S = F.div(kept, F.sum_(kept, axis=-1, keepdims=True))
    else:
        y = F.sum_(F.mul(preds, gate), axis=0)

    return F.reshape(y, lead + (proj.pred_len,)), S
