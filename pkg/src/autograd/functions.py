"""
Differentiable primitives.

Each primitive is a `Function` with a forward on arrays and a backward rule.
Elementwise binary ops follow numpy broadcasting; gradients are summed back
to the input shapes. Module-level helpers (`add`, `matmul`, `softmax`, ...)
are the public surface.
"""

import math
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from src.autograd.tensor import Function, Tensor, as_tensor, unbroadcast
from src.exceptions import ShapeError

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------
class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return unbroadcast(grad * b.data, a.shape), unbroadcast(grad * a.data, b.shape)


class Div(Function):
    def forward(self, a, b):
        return a / b

    def backward(self, grad):
        a, b = self.inputs
        ga = grad / b.data
        gb = -grad * a.data / (b.data * b.data)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)


class Scale(Function):
    def forward(self, a, factor: float = 1.0):
        self.saved["factor"] = factor
        return a * factor

    def backward(self, grad):
        return (grad * self.saved["factor"],)


# ---------------------------------------------------------------------------
# linear algebra and shape
# ---------------------------------------------------------------------------
class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError(f"matmul needs operands with ndim >= 2, got {a.shape} @ {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.inputs
        ga = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)


class Transpose(Function):
    """Swap the last two axes."""

    def forward(self, a):
        if a.ndim < 2:
            raise ShapeError(f"transpose needs ndim >= 2, got shape {a.shape}")
        return np.swapaxes(a, -1, -2).copy()

    def backward(self, grad):
        return (np.swapaxes(grad, -1, -2),)


class Reshape(Function):
    def forward(self, a, shape: Tuple[int, ...] = ()):
        self.saved["in_shape"] = a.shape
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise ShapeError(f"cannot reshape {a.shape} to {shape}") from e

    def backward(self, grad):
        return (grad.reshape(self.saved["in_shape"]),)


class Concat(Function):
    def forward(self, *arrays, axis: int = -1):
        self.saved["axis"] = axis
        self.saved["sizes"] = [arr.shape[axis] for arr in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        splits = np.cumsum(self.saved["sizes"])[:-1]
        return tuple(np.split(grad, splits, axis=self.saved["axis"]))


class Slice(Function):
    """Basic (non-fancy) indexing: ints, slices, Ellipsis, None."""

    def forward(self, a, key: Any = None):
        self.saved["key"] = key
        return np.array(a[key], dtype=np.float64)

    def backward(self, grad):
        (a,) = self.inputs
        out = np.zeros_like(a.data)
        out[self.saved["key"]] += grad
        return (out,)


class Gather(Function):
    """
    Select entries along `axis` by integer indices. Indices are constants;
    gradients flow to the selected values only.
    """

    def forward(self, a, indices: Optional[np.ndarray] = None, axis: int = -1):
        axis = axis % a.ndim
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != a.ndim:
            raise ShapeError(f"gather indices need ndim {a.ndim}, got {idx.ndim}")
        out_shape = tuple(idx.shape[i] if i == axis else a.shape[i] for i in range(a.ndim))
        idx = np.broadcast_to(idx, out_shape)
        grids = list(np.indices(out_shape, sparse=True))
        grids[axis] = idx
        self.saved["index"] = tuple(grids)
        return a[self.saved["index"]]

    def backward(self, grad):
        (a,) = self.inputs
        out = np.zeros_like(a.data)
        np.add.at(out, self.saved["index"], grad)
        return (out,)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------
def _expand(grad: np.ndarray, shape: Tuple[int, ...], axis: Optional[int], keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


def _count(shape: Tuple[int, ...], axis: Optional[int]) -> int:
    return int(np.prod(shape)) if axis is None else shape[axis]


class Sum(Function):
    def forward(self, a, axis: Optional[int] = None, keepdims: bool = False):
        self.saved.update(axis=axis, keepdims=keepdims)
        return np.asarray(a.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        (a,) = self.inputs
        return (_expand(grad, a.shape, self.saved["axis"], self.saved["keepdims"]).copy(),)


class Mean(Function):
    def forward(self, a, axis: Optional[int] = None, keepdims: bool = False):
        self.saved.update(axis=axis, keepdims=keepdims)
        return np.asarray(a.mean(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        (a,) = self.inputs
        n = _count(a.shape, self.saved["axis"])
        return (_expand(grad, a.shape, self.saved["axis"], self.saved["keepdims"]) / n,)


class Var(Function):
    """Population variance."""

    def forward(self, a, axis: Optional[int] = None, keepdims: bool = False):
        self.saved.update(axis=axis, keepdims=keepdims)
        return np.asarray(a.var(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        (a,) = self.inputs
        axis = self.saved["axis"]
        n = _count(a.shape, axis)
        centered = a.data - a.data.mean(axis=axis, keepdims=True)
        return (_expand(grad, a.shape, axis, self.saved["keepdims"]) * 2.0 * centered / n,)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------
class Exp(Function):
    def forward(self, a):
        out = np.exp(a)
        self.saved["out"] = out
        return out

    def backward(self, grad):
        return (grad * self.saved["out"],)


class Log(Function):
    def forward(self, a):
        return np.log(a)

    def backward(self, grad):
        return (grad / self.inputs[0].data,)


class Sqrt(Function):
    def forward(self, a):
        out = np.sqrt(a)
        self.saved["out"] = out
        return out

    def backward(self, grad):
        return (grad * 0.5 / self.saved["out"],)


class ClipMin(Function):
    """max(a, floor); gradient passes where a > floor."""

    def forward(self, a, floor: float = 0.0):
        self.saved["mask"] = a > floor
        return np.maximum(a, floor)

    def backward(self, grad):
        return (grad * self.saved["mask"],)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Softplus(Function):
    def forward(self, a):
        return np.logaddexp(0.0, a)

    def backward(self, grad):
        return (grad * _sigmoid(self.inputs[0].data),)


class Softmax(Function):
    """Softmax over the last axis."""

    def forward(self, a):
        shifted = a - a.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=-1, keepdims=True)
        self.saved["out"] = out
        return out

    def backward(self, grad):
        s = self.saved["out"]
        return (s * (grad - (grad * s).sum(axis=-1, keepdims=True)),)


class Gelu(Function):
    """GELU, tanh approximation."""

    def forward(self, a):
        inner = _GELU_C * (a + _GELU_A * a ** 3)
        t = np.tanh(inner)
        self.saved["t"] = t
        return 0.5 * a * (1.0 + t)

    def backward(self, grad):
        x = self.inputs[0].data
        t = self.saved["t"]
        d_inner = _GELU_C * (1.0 + 3.0 * _GELU_A * x ** 2)
        return (grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)


# ---------------------------------------------------------------------------
# composite layers with fused backward
# ---------------------------------------------------------------------------
class AvgPool1d(Function):
    """Average pooling over the last axis, kernel = stride = d, remainder dropped."""

    def forward(self, a, d: int = 2):
        length = a.shape[-1]
        if d < 1 or length < d:
            raise ShapeError(f"avg_pool1d needs length >= d, got length {length}, d={d}")
        n = length // d
        self.saved.update(d=d, n=n)
        return a[..., : n * d].reshape(a.shape[:-1] + (n, d)).mean(axis=-1)

    def backward(self, grad):
        (a,) = self.inputs
        d, n = self.saved["d"], self.saved["n"]
        out = np.zeros_like(a.data)
        out[..., : n * d] = np.repeat(grad, d, axis=-1) / d
        return (out,)


class LayerNorm(Function):
    """Normalize over the last axis, then apply elementwise gamma/beta."""

    def forward(self, x, gamma, beta, eps: float = 1e-5):
        mu = x.mean(axis=-1, keepdims=True)
        sigma = np.sqrt(x.var(axis=-1, keepdims=True) + eps)
        xhat = (x - mu) / sigma
        self.saved.update(xhat=xhat, sigma=sigma)
        return xhat * gamma + beta

    def backward(self, grad):
        x, gamma, beta = self.inputs
        xhat, sigma = self.saved["xhat"], self.saved["sigma"]
        dxhat = grad * gamma.data
        dx = (dxhat - dxhat.mean(axis=-1, keepdims=True)
              - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)) / sigma
        return dx, unbroadcast(grad * xhat, gamma.shape), unbroadcast(grad, beta.shape)


# ---------------------------------------------------------------------------
# public helpers
# ---------------------------------------------------------------------------
def add(a, b) -> Tensor:
    return Add.apply(a, b)


def sub(a, b) -> Tensor:
    return Sub.apply(a, b)


def mul(a, b) -> Tensor:
    return Mul.apply(a, b)


def div(a, b) -> Tensor:
    return Div.apply(a, b)


def scale(a, factor: float) -> Tensor:
    return Scale.apply(a, factor=float(factor))


def matmul(a, b) -> Tensor:
    return MatMul.apply(a, b)


def transpose(a) -> Tensor:
    return Transpose.apply(a)


def reshape(a, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def slice_(a, key) -> Tensor:
    return Slice.apply(a, key=key)


def gather(a, indices: np.ndarray, axis: int = -1) -> Tensor:
    return Gather.apply(a, indices=indices, axis=axis)


def sum_(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(a, axis=axis, keepdims=keepdims)


def var(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    return Var.apply(a, axis=axis, keepdims=keepdims)


def exp(a) -> Tensor:
    return Exp.apply(a)


def log(a) -> Tensor:
    return Log.apply(a)


def sqrt(a) -> Tensor:
    return Sqrt.apply(a)


def clip_min(a, floor: float) -> Tensor:
    return ClipMin.apply(a, floor=float(floor))


def softplus(a) -> Tensor:
    return Softplus.apply(a)


def softmax(a) -> Tensor:
    return Softmax.apply(a)


def gelu(a) -> Tensor:
    return Gelu.apply(a)


def avg_pool1d(a, d: int) -> Tensor:
    return AvgPool1d.apply(a, d=int(d))


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def square(a) -> Tensor:
    a = as_tensor(a)
    return Mul.apply(a, a)
