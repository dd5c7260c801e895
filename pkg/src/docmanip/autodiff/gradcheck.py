"""Central finite-difference verification of backprop gradients."""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from . import ops
from .tensor import Tensor, no_grad


class NondeterministicLoss(RuntimeError):
    pass


def relative_error(analytic: float, numeric: float, floor: float = 1e-7) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    epsilon: float = 1e-6,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
    floor: float = 1e-7,
    order: int = 2,
) -> float:
    """Return the max relative error between backprop and central differences.

    ``order=2`` uses the three-point stencil, ``order=4`` the five-point one
    (truncation error O(eps^4), so a larger ``epsilon`` keeps rounding noise
    low on losses whose true gradients are tiny).

    Every coordinate of every parameter is probed unless the total exceeds
    ``max_coords``, in which case a seeded random subsample is used.  The
    relative error denominator is floored at ``floor`` so coordinates whose
    true gradient is ~0 are judged on absolute error.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    for p in params.values():
        if p.data.dtype != np.float64:
            raise TypeError("grad_check requires float64 parameters")
        p.grad = None
    loss = loss_fn()
    with no_grad():
        again = loss_fn()
    if float(loss.data) != float(again.data):
        raise NondeterministicLoss(
            f"loss differs across identical forward passes: {float(loss.data)!r} vs {float(again.data)!r}"
        )
    loss.backward()
    analytic = {k: (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for k, p in params.items()}

    coords = [(k, i) for k, p in params.items() for i in range(p.data.size)]
    if max_coords is not None and len(coords) > max_coords:
        rng = rng if rng is not None else np.random.default_rng(0)
        pick = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(pick)]

    worst = 0.0
    with no_grad():
        for name, flat in coords:
            p = params[name]
            idx = np.unravel_index(flat, p.data.shape)
            orig = p.data[idx]

            def at(step):
                p.data[idx] = orig + step
                return float(loss_fn().data)

            try:
                if order == 2:
                    numeric = (at(epsilon) - at(-epsilon)) / (2.0 * epsilon)
                else:
                    numeric = (8.0 * (at(epsilon) - at(-epsilon)) - (at(2 * epsilon) - at(-2 * epsilon))) / (12.0 * epsilon)
            finally:
                p.data[idx] = orig
            worst = max(worst, relative_error(float(analytic[name][idx]), numeric, floor))
    for p in params.values():
        p.grad = None
    return worst


def check_op(fn: Callable[..., Tensor], *arrays: np.ndarray, seed: int = 0, **kw) -> float:
    """Grad-check ``fn`` applied to fresh leaf tensors built from ``arrays``.

    The output is contracted with a fixed random tensor so every output entry
    contributes to the scalar being checked.
    """
    leaves = {f"arg{i}": Tensor(np.array(a, dtype=np.float64), requires_grad=True) for i, a in enumerate(arrays)}
    probe = {}

    def loss():
        out = fn(*leaves.values())
        if "w" not in probe:
            probe["w"] = np.random.default_rng(seed).standard_normal(out.shape)
        return ops.sum(ops.mul(out, probe["w"]))

    return grad_check(loss, leaves, **kw)
