"""
Minimal float64 tensor engine with reverse-mode differentiation.
"""

from .tensor import Function, Graph, Tensor, as_tensor, is_grad_enabled, no_grad
from .functions import (
    add, avg_pool1d, clip_min, concat, div, exp, gather, gelu, layer_norm, log,
    matmul, mean, mul, reshape, scale, slice_, softmax, softplus, sqrt, square,
    sub, sum_, transpose, var,
)
from .gradcheck import grad_check

__all__ = [
    'Function', 'Graph', 'Tensor', 'as_tensor', 'is_grad_enabled', 'no_grad', 'grad_check',
    'add', 'avg_pool1d', 'clip_min', 'concat', 'div', 'exp', 'gather', 'gelu', 'layer_norm',
    'log', 'matmul', 'mean', 'mul', 'reshape', 'scale', 'slice_', 'softmax', 'softplus',
    'sqrt', 'square', 'sub', 'sum_', 'transpose', 'var',
]
