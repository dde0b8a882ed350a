"""
Adam with decoupled weight decay over a ParameterRegistry.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.exceptions import NumericError
from src.model.layers import ParameterRegistry


@dataclass
class AdamState:
    step: int = 0
    exp_avg: Dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg_sq: Dict[str, np.ndarray] = field(default_factory=dict)


def collect_grads(registry: ParameterRegistry) -> Dict[str, np.ndarray]:
    """Current .grad of every parameter; unused parameters get zeros."""
    return {name: (t.grad if t.grad is not None else np.zeros_like(t.data)) for name, t in registry.items()}


def clip_grad_norm(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm. Returns the norm before clipping."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        factor = max_norm / (total + 1e-12)
        for name in grads:
            grads[name] = grads[name] * factor
    return total


def adam_step(
    registry: ParameterRegistry,
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """
    theta <- theta - lr * wd * theta, then
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    with bias-corrected first/second moments.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter '{name}'")

    beta1, beta2 = betas
    state.step += 1
    bias1 = 1.0 - beta1 ** state.step
    bias2 = 1.0 - beta2 ** state.step

    for name, param in registry.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(param.data)
        m = state.exp_avg.get(name)
        v = state.exp_avg_sq.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.exp_avg[name], state.exp_avg_sq[name] = m, v

        data = param.data
        if weight_decay:
            data = data - lr * weight_decay * data
        param.data = data - lr * (m / bias1) / (np.sqrt(v / bias2) + eps)


class Adam:
    """Stateful wrapper: zero_grad / step, like torch.optim."""

    def __init__(self, registry: ParameterRegistry, lr: float, betas: Tuple[float, float] = (0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0, grad_clip: Optional[float] = None,
                 logger=None):
        self.registry = registry
        self.lr, self.betas, self.eps = lr, betas, eps
        self.weight_decay = weight_decay
        self.grad_clip = grad_clip
        self.state = AdamState()
        self.logger = logger or logging.getLogger(__name__)

    def zero_grad(self) -> None:
        self.registry.zero_grad()

    def step(self) -> float:
        """Apply one update from the parameters' current gradients. Returns the gradient norm."""
        grads = collect_grads(self.registry)
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if self.grad_clip is not None and np.isfinite(norm):
            clip_grad_norm(grads, self.grad_clip)
        adam_step(self.registry, grads, self.state, self.lr, self.betas, self.eps, self.weight_decay)
        return norm
