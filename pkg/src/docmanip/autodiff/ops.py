"""Differentiable primitives over dense arrays.

Binary ops follow numpy broadcasting; gradients are summed back to the
input shape.  ``matmul`` follows ``np.matmul`` semantics including batch
broadcasting.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import Tensor, as_tensor, record


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g[0], a.shape), _unbroadcast(g[0], b.shape)

    return record([a, b], [a.data + b.data], bw, "add")[0]


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return _unbroadcast(g[0], a.shape), _unbroadcast(-g[0], b.shape)

    return record([a, b], [a.data - b.data], bw, "sub")[0]


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def bw(g):
        return (
            _unbroadcast(g[0] * b.data, a.shape),
            _unbroadcast(g[0] * a.data, b.shape),
        )

    return record([a, b], [a.data * b.data], bw, "mul")[0]


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs rank >= 2 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")

    def bw(g):
        g = g[0]
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return record([a, b], [a.data @ b.data], bw, "matmul")[0]


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = 0.5 * (np.tanh(0.5 * x.data) + 1.0)

    def bw(g):
        return (g[0] * y * (1.0 - y),)

    return record([x], [y], bw, "sigmoid")[0]


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)

    def bw(g):
        return (g[0] * (1.0 - y * y),)

    return record([x], [y], bw, "tanh")[0]


def exp(x) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.data)

    def bw(g):
        return (g[0] * y,)

    return record([x], [y], bw, "exp")[0]


def log(x) -> Tensor:
    x = as_tensor(x)

    def bw(g):
        return (g[0] / x.data,)

    return record([x], [np.log(x.data)], bw, "log")[0]


def _masked_logits(data: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return data
    return np.where(np.broadcast_to(mask, data.shape) > 0, data, -np.inf)


def softmax(x, axis: int = -1, mask=None) -> Tensor:
    """Max-stabilised softmax along ``axis``.

    ``mask`` (broadcastable to ``x``) zeroes the probability of excluded
    positions; a slice with every position excluded yields all zeros.
    """
    x = as_tensor(x)
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError("softmax input contains NaN or Inf")
    z = _masked_logits(x.data, mask)
    zmax = np.max(z, axis=axis, keepdims=True)
    zmax = np.where(np.isfinite(zmax), zmax, 0.0)
    e = np.exp(z - zmax)
    s = e.sum(axis=axis, keepdims=True)
    y = e / np.where(s > 0, s, 1.0)

    def bw(g):
        g = g[0]
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return record([x], [y], bw, "softmax")[0]


def softmax_axis(m, axis: str) -> Tensor:
    """Softmax of a rank-2 tensor along ``"rows"`` (each row sums to 1) or ``"cols"``."""
    m = as_tensor(m)
    if m.ndim != 2:
        raise ValueError("softmax_axis expects a rank-2 tensor")
    if axis == "rows":
        return softmax(m, axis=1)
    if axis == "cols":
        return softmax(m, axis=0)
    raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError("log_softmax input contains NaN or Inf")
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def bw(g):
        g = g[0]
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return record([x], [y], bw, "log_softmax")[0]


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return np.split(g[0], splits, axis=axis)

    return record(xs, [np.concatenate([x.data for x in xs], axis=axis)], bw, "concat")[0]


def stack(xs: Sequence, axis: int = 0) -> Tensor:
    xs = [as_tensor(x) for x in xs]

    def bw(g):
        return [np.take(g[0], i, axis=axis) for i in range(len(xs))]

    return record(xs, [np.stack([x.data for x in xs], axis=axis)], bw, "stack")[0]


def unstack(x, axis: int = 0) -> list[Tensor]:
    """Split ``x`` along ``axis`` into a list of tensors (one graph node)."""
    x = as_tensor(x)
    n = x.shape[axis]
    parts = [np.take(x.data, i, axis=axis) for i in range(n)]

    def bw(g):
        return (np.stack(g, axis=axis),)

    return record([x], parts, bw, "unstack")


def getitem(x, idx) -> Tensor:
    x = as_tensor(x)

    def bw(g):
        out = np.zeros_like(x.data)
        np.add.at(out, idx, g[0])
        return (out,)

    return record([x], [x.data[idx]], bw, "getitem")[0]


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)

    def bw(g):
        return (g[0].reshape(x.shape),)

    return record([x], [x.data.reshape(shape)], bw, "reshape")[0]


def swapaxes(x, a: int = -1, b: int = -2) -> Tensor:
    x = as_tensor(x)

    def bw(g):
        return (np.swapaxes(g[0], a, b),)

    return record([x], [np.swapaxes(x.data, a, b)], bw, "swapaxes")[0]


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)

    def bw(g):
        g = g[0]
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return record([x], [np.sum(x.data, axis=axis, keepdims=keepdims)], bw, "sum")[0]


def mean(x, axis=None) -> Tensor:
    x = as_tensor(x)
    n = x.data.size if axis is None else x.shape[axis]
    return mul(sum(x, axis=axis), 1.0 / n)


def embedding(weight: Tensor, ids) -> Tensor:
    """Row lookup ``weight[ids]``; repeated ids accumulate gradient."""
    ids = np.asarray(ids, dtype=np.int64)

    def bw(g):
        out = np.zeros_like(weight.data)
        np.add.at(out, ids.reshape(-1), g[0].reshape(-1, weight.shape[-1]))
        return (out,)

    return record([weight], [weight.data[ids]], bw, "embedding")[0]


def gather(x, index, axis: int) -> Tensor:
    """``np.take_along_axis`` with gradient scattered back."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def bw(g):
        out = np.zeros_like(x.data)
        idx = np.broadcast_to(index, g[0].shape)
        grids = list(np.indices(g[0].shape, sparse=True))
        grids[axis] = idx
        np.add.at(out, tuple(grids), g[0])
        return (out,)

    return record([x], [np.take_along_axis(x.data, index, axis=axis)], bw, "gather")[0]


def dropout(x, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate is 0."""
    x = as_tensor(x)
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate).astype(x.data.dtype) / (1.0 - rate)
    return mul(x, keep)


def masked_cross_entropy(probs, targets, mask=None, floor: float = 1e-12) -> Tensor:
    """Mean negative log-probability of ``targets`` under ``probs``.

    ``probs`` has shape (..., V) and ``targets`` (...); ``mask`` selects the
    positions that count.  Probabilities are floored at ``floor`` before the
    log so that a zero entry gives a large finite loss.
    """
    probs = as_tensor(probs)
    targets = np.asarray(targets, dtype=np.int64)
    m = np.ones(targets.shape) if mask is None else np.asarray(mask, dtype=float)
    denom = m.sum()
    if denom <= 0:
        raise ValueError("masked_cross_entropy with an empty mask")
    picked = np.take_along_axis(probs.data, targets[..., None], axis=-1)[..., 0]
    clipped = np.maximum(picked, floor)
    loss = -(m * np.log(clipped)).sum() / denom

    def bw(g):
        out = np.zeros_like(probs.data)
        local = np.where(picked > floor, -m / (clipped * denom), 0.0) * g[0]
        np.put_along_axis(out, targets[..., None], local[..., None], axis=-1)
        return (out,)

    return record([probs], [np.asarray(loss, dtype=probs.data.dtype)], bw, "xent")[0]
