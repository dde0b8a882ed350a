"""
Finite-difference verification of the recorded backward rules.
"""

import logging
from typing import Callable, List, Sequence

import numpy as np

from src.autograd.tensor import Tensor, no_grad
from src.exceptions import NumericError

logger = logging.getLogger(__name__)

TensorFunction = Callable[..., Tensor]


def _scalar(out: Tensor) -> Tensor:
    # non-scalar outputs are reduced by summation
    return out if out.size == 1 else out.sum()


def grad_check(fn: TensorFunction, inputs: Sequence[Tensor], step: float = 1e-6) -> float:
    """
    Compare analytic gradients with central differences.

    Args:
        fn: Deterministic function of the input tensors
        inputs: Tensors to differentiate with respect to (requires_grad is set)
        step: Finite-difference step (> 0)

    Returns:
        max over every input coordinate of
        |analytic - numeric| / max(1, |analytic|, |numeric|)
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")

    inputs = list(inputs)
    for t in inputs:
        t.requires_grad = True
        t.grad = None

    out = _scalar(fn(*inputs))
    if not np.all(np.isfinite(out.data)):
        raise NumericError("grad_check: fn produced a non-finite output at the unperturbed point")
    out.backward()
    analytic: List[np.ndarray] = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]

    worst = 0.0
    with no_grad():
        for i, t in enumerate(inputs):
            flat = t.data.reshape(-1)
            g = analytic[i].reshape(-1)
            for j in range(flat.size):
                original = flat[j]
                flat[j] = original + step
                f_plus = _scalar(fn(*inputs)).item()
                flat[j] = original - step
                f_minus = _scalar(fn(*inputs)).item()
                flat[j] = original
                if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                    raise NumericError(f"grad_check: non-finite output at input {i}, coordinate {j}")
                numeric = (f_plus - f_minus) / (2.0 * step)
                err = abs(g[j] - numeric) / max(1.0, abs(g[j]), abs(numeric))
                worst = max(worst, err)

    logger.debug(f"grad_check over {len(inputs)} inputs: max relative error {worst:.3e}")
    return worst
