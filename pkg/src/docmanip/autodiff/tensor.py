"""Tensor and graph bookkeeping for reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array.  Every differentiable operation that
touches at least one tensor with ``requires_grad`` records a :class:`Node`
holding its inputs, its outputs and a closure mapping output gradients to
input gradients.  :func:`backward` walks the nodes in reverse topological
order exactly once and accumulates gradients into leaf tensors.
"""
from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np

_DEFAULT_DTYPE = np.float64
_GRAD_ENABLED = True


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}")
    _DEFAULT_DTYPE = dtype.type


def get_default_dtype():
    return _DEFAULT_DTYPE


@contextlib.contextmanager
def default_dtype(dtype) -> Iterator[None]:
    old = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _GRAD_ENABLED
    old = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = old


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Node:
    __slots__ = ("inputs", "outputs", "backward_fn", "name")

    def __init__(self, inputs, outputs, backward_fn, name=""):
        self.inputs = inputs
        self.outputs = outputs
        self.backward_fn = backward_fn
        self.name = name


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "node", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if arr.dtype.kind != "f":
            arr = arr.astype(_DEFAULT_DTYPE)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.node: Node | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, idx):
        from . import ops
        return ops.getitem(self, idx)

    def backward(self, grad=None) -> None:
        backward(self, grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def record(
    inputs: Sequence[Tensor],
    outputs_data: Sequence[np.ndarray],
    backward_fn: Callable[[list[np.ndarray]], Sequence[np.ndarray | None]],
    name: str = "",
) -> list[Tensor]:
    """Wrap op outputs in tensors and attach a graph node when needed."""
    needs = _GRAD_ENABLED and any(t.requires_grad for t in inputs)
    outs = [Tensor(d, requires_grad=needs) for d in outputs_data]
    if needs:
        node = Node(tuple(inputs), outs, backward_fn, name)
        for o in outs:
            o.node = node
    return outs


def _toposort(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for inp in node.inputs:
            if inp.node is not None and id(inp.node) not in seen:
                stack.append((inp.node, False))
    return order


def backward(root: Tensor, grad=None) -> None:
    """Accumulate d(root)/d(leaf) into ``leaf.grad`` for every reachable leaf."""
    if grad is None:
        if root.data.size != 1:
            raise ValueError("implicit gradient only defined for scalar outputs")
        grad = np.ones_like(root.data)
    grad = np.asarray(grad, dtype=root.data.dtype)
    if root.node is None:
        if root.requires_grad:
            root.grad = grad.copy() if root.grad is None else root.grad + grad
        return
    grads: dict[int, np.ndarray] = {id(root): grad}
    for node in reversed(_toposort(root.node)):
        out_grads = [grads.pop(id(o), None) for o in node.outputs]
        if all(g is None for g in out_grads):
            continue
        out_grads = [
            np.zeros_like(o.data) if g is None else g
            for o, g in zip(node.outputs, out_grads)
        ]
        in_grads = node.backward_fn(out_grads)
        for inp, g in zip(node.inputs, in_grads):
            if g is None or not inp.requires_grad:
                continue
            if inp.node is None:
                inp.grad = g.copy() if inp.grad is None else inp.grad + g
            else:
                key = id(inp)
                prev = grads.get(key)
                grads[key] = g if prev is None else prev + g
