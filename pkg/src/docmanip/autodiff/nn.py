"""Recurrent building blocks: a fused LSTM step and a masked bi-LSTM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .tensor import Tensor, as_tensor, get_default_dtype, record


@dataclass
class LSTMWeights:
    """Gate columns are ordered input, forget, output, candidate."""

    wx: Tensor  # (d_in, 4d)
    wh: Tensor  # (d, 4d)
    b: Tensor  # (4d,)

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]

    @property
    def input_size(self) -> int:
        return self.wx.shape[0]


def _sig(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_step(xw, h, c, wh, mask=None) -> tuple[Tensor, Tensor]:
    """One LSTM update given the precomputed input projection ``xw = x Wx + b``.

    ``mask`` of shape (S, 1) keeps the previous state where it is 0, which is
    how padded positions of a batch are skipped.
    """
    xw, h, c, wh = as_tensor(xw), as_tensor(h), as_tensor(c), as_tensor(wh)
    d = wh.shape[0]
    if xw.shape[-1] != 4 * d or h.shape[-1] != d or c.shape[-1] != d:
        raise ValueError(
            f"lstm shapes inconsistent: xw {xw.shape}, h {h.shape}, c {c.shape}, wh {wh.shape}"
        )
    gates = xw.data + h.data @ wh.data
    i = _sig(gates[..., :d])
    f = _sig(gates[..., d : 2 * d])
    o = _sig(gates[..., 2 * d : 3 * d])
    g = np.tanh(gates[..., 3 * d :])
    c_new = f * c.data + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    if mask is not None:
        m = np.asarray(mask, dtype=h_new.dtype)
        h_out = m * h_new + (1.0 - m) * h.data
        c_out = m * c_new + (1.0 - m) * c.data
    else:
        m = None
        h_out, c_out = h_new, c_new

    def bw(grads):
        dh, dc = grads
        if m is not None:
            dh_keep, dc_keep = (1.0 - m) * dh, (1.0 - m) * dc
            dh, dc = m * dh, m * dc
        else:
            dh_keep = dc_keep = 0.0
        dct = dc + dh * o * (1.0 - tc * tc)
        dgates = np.concatenate(
            [
                dct * g * i * (1.0 - i),
                dct * c.data * f * (1.0 - f),
                dh * tc * o * (1.0 - o),
                dct * i * (1.0 - g * g),
            ],
            axis=-1,
        )
        dxw = dgates
        dh_prev = dgates @ wh.data.T + dh_keep
        dc_prev = dct * f + dc_keep
        h2 = h.data.reshape(-1, d)
        dwh = h2.T @ dgates.reshape(-1, 4 * d)
        return dxw, dh_prev, dc_prev, dwh

    h_t, c_t = record([xw, h, c, wh], [h_out, c_out], bw, "lstm_step")
    return h_t, c_t


def lstm_cell(x, h, c, params: LSTMWeights) -> tuple[Tensor, Tensor]:
    """Standard LSTM cell: c' = f*c + i*g, h' = o*tanh(c')."""
    x = as_tensor(x)
    if x.shape[-1] != params.input_size:
        raise ValueError(f"input width {x.shape[-1]} != {params.input_size}")
    squeeze = x.ndim == 1
    if squeeze:
        x = ops.reshape(x, (1, -1))
        h = ops.reshape(as_tensor(h), (1, -1))
        c = ops.reshape(as_tensor(c), (1, -1))
    xw = ops.add(ops.matmul(x, params.wx), params.b)
    h2, c2 = lstm_step(xw, h, c, params.wh)
    if squeeze:
        h2 = ops.reshape(h2, (-1,))
        c2 = ops.reshape(c2, (-1,))
    return h2, c2


def reverse_index(lengths, steps: int) -> np.ndarray:
    """Per-sequence time reversal of the first ``lengths[s]`` steps; padding stays put."""
    lengths = np.asarray(lengths, dtype=np.int64)
    t = np.arange(steps)[None, :]
    return np.where(t < lengths[:, None], lengths[:, None] - 1 - t, t)


def _run(xw_steps, wh, masks, d, n):
    dtype = get_default_dtype()
    h = Tensor(np.zeros((n, d), dtype=dtype))
    c = Tensor(np.zeros((n, d), dtype=dtype))
    hs = []
    for t, xw in enumerate(xw_steps):
        h, c = lstm_step(xw, h, c, wh, None if masks is None else masks[:, t : t + 1])
        hs.append(h)
    return hs, h


def bilstm_encode(seq, fwd: LSTMWeights, bwd: LSTMWeights, lengths=None):
    """Bidirectional LSTM over a padded batch.

    ``seq`` is (S, T, D) with valid lengths ``lengths`` (default all T), or a
    list of (D,) tensors for a single sequence.  Returns ``(states, fwd_last,
    bwd_first)``: states (S, T, 2d) concatenates forward and backward state k;
    fwd_last is the forward state at each sequence's last valid step and
    bwd_first the backward state at step 0.  For list input the states come
    back as a list of (2d,) tensors and the summaries as (d,) tensors.
    """
    as_list = isinstance(seq, (list, tuple))
    if as_list:
        if len(seq) == 0:
            raise ValueError("bilstm_encode on an empty sequence")
        seq = ops.reshape(ops.stack(list(seq), axis=0), (1, len(seq), -1))
    seq = as_tensor(seq)
    n, steps, _ = seq.shape
    if steps == 0:
        raise ValueError("bilstm_encode on an empty sequence")
    d = fwd.hidden
    if lengths is None:
        lengths = np.full(n, steps, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if np.any(lengths < 1) or np.any(lengths > steps):
        raise ValueError("sequence lengths must be in [1, T]")
    ragged = bool(np.any(lengths < steps))
    masks = (np.arange(steps)[None, :] < lengths[:, None]).astype(get_default_dtype()) if ragged else None

    xf = ops.add(ops.matmul(seq, fwd.wx), fwd.b)
    hs_f, last_f = _run(ops.unstack(xf, axis=1), fwd.wh, masks, d, n)

    xb = ops.add(ops.matmul(seq, bwd.wx), bwd.b)
    if ragged:
        rev = reverse_index(lengths, steps)[:, :, None]
        hs_b, first_b = _run(ops.unstack(ops.gather(xb, rev, axis=1), axis=1), bwd.wh, masks, d, n)
        back = ops.gather(ops.stack(hs_b, axis=1), rev, axis=1)
    else:
        steps_b = ops.unstack(xb, axis=1)[::-1]
        hs_b, first_b = _run(steps_b, bwd.wh, None, d, n)
        back = ops.stack(hs_b[::-1], axis=1)

    states = ops.concat([ops.stack(hs_f, axis=1), back], axis=-1)
    if as_list:
        flat = ops.reshape(states, (steps, 2 * d))
        return ops.unstack(flat, axis=0), ops.reshape(last_f, (d,)), ops.reshape(first_b, (d,))
    return states, last_f, first_b


def lstm_forward(seq, weights: LSTMWeights, lengths=None, reverse: bool = False):
    """Single-direction LSTM over a padded (S, T, D) batch, without the fused
    input projection; used as an independent reference for bilstm_encode.
    Returns the (S, T, d) states in original time order."""
    seq = as_tensor(seq)
    n, steps, _ = seq.shape
    d = weights.hidden
    lengths = np.full(n, steps) if lengths is None else np.asarray(lengths)
    dtype = get_default_dtype()
    out = np.zeros((n, steps, d), dtype=dtype)
    for s in range(n):
        h = Tensor(np.zeros(d, dtype=dtype))
        c = Tensor(np.zeros(d, dtype=dtype))
        order = range(lengths[s] - 1, -1, -1) if reverse else range(lengths[s])
        for t in order:
            h, c = lstm_cell(seq.data[s, t], h, c, weights)
            out[s, t] = h.data
    return out
