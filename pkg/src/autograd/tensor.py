"""
Dense float64 tensors with define-by-run reverse-mode differentiation.

Every primitive is a `Function` subclass (see functions.py). Applying one
records a node holding its inputs and a backward rule; `Tensor.backward()`
replays the recorded nodes in reverse recording order.
"""

import itertools
import logging
import threading
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.exceptions import GraphFreedError, ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_sequence = itertools.count()
_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording a graph (evaluation, finite differences)."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


def unbroadcast(grad: np.ndarray, to_shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out the dimensions numpy broadcasting added so grad matches to_shape."""
    if grad.shape == to_shape:
        return grad
    while grad.ndim > len(to_shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(to_shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """
    Base class for a recorded primitive.

    Subclasses implement `forward` on raw arrays and `backward`, which maps the
    gradient of the output to one gradient (or None) per input.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs
        self.seq = next(_sequence)
        self.freed = False
        self.saved: Dict[str, Any] = {}

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__}.forward")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__}.backward")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        inputs = tuple(as_tensor(t) for t in inputs)
        fn = cls(*inputs)
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        out = Tensor(out_data, requires_grad=requires_grad)
        if requires_grad:
            out.node = fn
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}#{self.seq}"


class Graph:
    """
    Recorded primitive applications reachable from one output, in recording
    order. Inputs of a node are always created before it, so recording order
    is a topological order.
    """

    def __init__(self, nodes: List[Function]):
        self.nodes = nodes

    @classmethod
    def from_output(cls, output: "Tensor") -> "Graph":
        seen = set()
        nodes: List[Function] = []
        stack = [output.node] if output.node is not None else []
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            nodes.append(node)
            for t in node.inputs:
                if t.node is not None and id(t.node) not in seen:
                    stack.append(t.node)
        nodes.sort(key=lambda n: n.seq)
        return cls(nodes)

    def __len__(self) -> int:
        return len(self.nodes)


class Tensor:
    """
    Row-major float64 array plus optional gradient and graph node.

    Leaves are created by the user (parameters, inputs); non-leaves carry the
    `node` that produced them. A tensor's data is never mutated while it takes
    part in a recorded graph.
    """

    __array_priority__ = 1000

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[Function] = None
        self.name = name

    # ---- basic properties -------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # ---- differentiation --------------------------------------------------
    def backward(self) -> None:
        """
        Populate `.grad` on every reachable leaf with requires_grad.

        Leaf gradients accumulate additively (call zero_grad between steps);
        the graph is consumed and cannot be replayed.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar output, got shape {self.shape}")
        if self.node is None:
            if self.requires_grad:
                self._accumulate(np.ones_like(self.data))
            return
        if self.node.freed:
            raise GraphFreedError("backward() called twice on the same graph")

        graph = Graph.from_output(self)
        # A rejected call leaves every leaf gradient untouched.
        consumed = [node for node in graph.nodes if node.freed]
        if consumed:
            raise GraphFreedError(f"backward() reaches {consumed[0]!r}, already consumed by an earlier backward()")
        grads: Dict[int, np.ndarray] = {id(self.node): np.ones_like(self.data)}
        for node in reversed(graph.nodes):
            out_grad = grads.pop(id(node), None)
            node.freed = True
            if out_grad is None:
                continue
            in_grads = node.backward(out_grad)
            for t, g in zip(node.inputs, in_grads):
                if g is None or not t.requires_grad:
                    continue
                if t.node is None:
                    t._accumulate(g)
                else:
                    key = id(t.node)
                    grads[key] = grads[key] + g if key in grads else g
            node.saved.clear()

    def _accumulate(self, g: np.ndarray) -> None:
        g = np.asarray(g, dtype=np.float64).reshape(self.shape)
        self.grad = g.copy() if self.grad is None else self.grad + g

    # ---- operator sugar (implementations live in functions.py) -------------
    def __add__(self, other): return F.add(self, other)
    def __radd__(self, other): return F.add(other, self)
    def __sub__(self, other): return F.sub(self, other)
    def __rsub__(self, other): return F.sub(other, self)
    def __mul__(self, other): return F.mul(self, other)
    def __rmul__(self, other): return F.mul(other, self)
    def __truediv__(self, other): return F.div(self, other)
    def __rtruediv__(self, other): return F.div(other, self)
    def __matmul__(self, other): return F.matmul(self, other)
    def __neg__(self): return F.scale(self, -1.0)
    def __getitem__(self, key): return F.slice_(self, key)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self) -> "Tensor":
        return F.transpose(self)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return F.sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return F.mean(self, axis=axis, keepdims=keepdims)

    def var(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return F.var(self, axis=axis, keepdims=keepdims)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


from src.autograd import functions as F  # noqa: E402  (circular: functions needs Tensor)
