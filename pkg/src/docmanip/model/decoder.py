"""LSTM decoder with joint attention and record copying.

At each step the decoder attends over the fusion bank F (or, with
interactive attention disabled, separately over R and W), mixes a copy
distribution over record values with a vocabulary distribution:

    P(z) = g * sum_{o: value(o) = z} alpha_o + (1 - g) * beta(z)

Records sharing a value token pool their copy mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, get_default_dtype, lstm_step, ops
from ..data import BOS_ID, EOS_ID
from .encoders import RecordBank, ReferenceBank
from .interactive import FusionBank


@dataclass
class Encoded:
    records: RecordBank
    reference: ReferenceBank
    fusion: FusionBank | None
    copy_map: np.ndarray  # (B, L_x, V): 1 where record o carries value token v

    @property
    def rec_mask(self) -> np.ndarray:
        return self.records.mask


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor
    step: int
    prev_token: np.ndarray


@dataclass
class StepDistribution:
    alpha: Tensor  # attention over records (…, L_x)
    g: Tensor  # copy gate (…, 1)
    beta: Tensor  # vocabulary distribution (…, V)
    P: Tensor  # mixed distribution (…, V)


def copy_map(value_ids: np.ndarray, rec_mask: np.ndarray, vocab_size: int) -> np.ndarray:
    b, n = value_ids.shape
    out = np.zeros((b, n, vocab_size), dtype=get_default_dtype())
    bi, oi = np.nonzero(np.asarray(rec_mask) > 0)
    out[bi, oi, value_ids[bi, oi]] = 1.0
    return out


def mix_distribution(alpha, g, beta, cmap) -> Tensor:
    """g * (alpha aggregated by value token) + (1 - g) * beta."""
    copy = ops.matmul(ops.as_tensor(alpha), cmap)
    g = ops.as_tensor(g)
    return ops.add(ops.mul(g, copy), ops.mul(ops.sub(1.0, g), beta))


def init_decoder_state(params, bank: RecordBank) -> DecoderState:
    """h = tanh(U table_rep + b), c = 0."""
    h = ops.tanh(ops.add(ops.matmul(bank.table_rep, params["dec.init.w"]), params["dec.init.b"]))
    c = Tensor(np.zeros(h.shape, dtype=h.data.dtype))
    return DecoderState(h, c, 0, np.full(h.shape[0], BOS_ID, dtype=np.int64))


def _attend(H, bank: Tensor, w: Tensor, mask: np.ndarray):
    """Bilinear attention of queries H (B, T, d) over a (B, width, P) bank."""
    scores = ops.matmul(ops.matmul(H, w), bank)  # (B, T, P)
    alpha = ops.softmax(scores, axis=-1, mask=np.asarray(mask)[:, None, :])
    ctx = ops.matmul(alpha, ops.swapaxes(bank, 1, 2))
    return alpha, ctx


def output_distribution(params, H: Tensor, prev_emb: Tensor, enc: Encoded, inter_att: bool, dropout) -> StepDistribution:
    """Distributions for decoder states H (B, T, d) given previous-token embeddings."""
    if inter_att:
        alpha, ctx = _attend(H, enc.fusion.F, params["dec.attn.w"], enc.rec_mask)
    else:
        alpha, ctx_r = _attend(H, enc.records.R, params["dec.attn_r.w"], enc.rec_mask)
        _, ctx_w = _attend(H, enc.reference.W, params["dec.attn_w.w"], enc.reference.mask)
        ctx = ops.concat([ctx_r, ctx_w], axis=-1)
    pre = ops.tanh(ops.add(ops.matmul(ops.concat([H, ctx], axis=-1), params["dec.pre.w"]), params["dec.pre.b"]))
    pre = dropout(pre)
    beta = ops.softmax(ops.add(ops.matmul(pre, params["dec.out.w"]), params["dec.out.b"]), axis=-1)
    g = ops.sigmoid(ops.add(ops.matmul(ops.concat([H, ctx, prev_emb], axis=-1), params["dec.gate.w"]), params["dec.gate.b"]))
    return StepDistribution(alpha, g, beta, mix_distribution(alpha, g, beta, enc.copy_map))


def teacher_forced(params, dec_in: np.ndarray, enc: Encoded, inter_att: bool, dropout) -> StepDistribution:
    """Run the decoder over gold inputs ``dec_in`` (B, T); returns (B, T, ·) distributions."""
    state = init_decoder_state(params, enc.records)
    emb = ops.embedding(params["emb"], dec_in)
    xw = ops.add(ops.matmul(dropout(emb), params["dec.lstm.wx"]), params["dec.lstm.b"])
    h, c = state.h, state.c
    hs = []
    for x_t in ops.unstack(xw, axis=1):
        h, c = lstm_step(x_t, h, c, params["dec.lstm.wh"])
        hs.append(h)
    H = ops.stack(hs, axis=1)
    return output_distribution(params, H, emb, enc, inter_att, dropout)


def decode_step(params, state: DecoderState, enc: Encoded, inter_att: bool, dropout=lambda t: t):
    """Advance one step from ``state.prev_token``; returns (StepDistribution of (B, ·), new state)."""
    emb = ops.embedding(params["emb"], state.prev_token)
    xw = ops.add(ops.matmul(dropout(emb), params["dec.lstm.wx"]), params["dec.lstm.b"])
    h, c = lstm_step(xw, state.h, state.c, params["dec.lstm.wh"])
    b = h.shape[0]
    d = h.shape[1]
    dist = output_distribution(
        params, ops.reshape(h, (b, 1, d)), ops.reshape(emb, (b, 1, d)), enc, inter_att, dropout
    )
    squeeze = lambda t: ops.reshape(t, (b, t.shape[-1]))  # noqa: E731
    step_dist = StepDistribution(squeeze(dist.alpha), squeeze(dist.g), squeeze(dist.beta), squeeze(dist.P))
    return step_dist, DecoderState(h, c, state.step + 1, state.prev_token)


def greedy_decode(params, enc: Encoded, inter_att: bool, max_len: int, min_len: int = 0) -> list[list[int]]:
    """Argmax decoding for a batch; EOS is blocked before ``min_len`` tokens."""
    state = init_decoder_state(params, enc.records)
    b = state.h.shape[0]
    out: list[list[int]] = [[] for _ in range(b)]
    done = np.zeros(b, dtype=bool)
    for t in range(max_len):
        dist, state = decode_step(params, state, enc, inter_att)
        p = dist.P.data.copy()
        if t < min_len:
            p[:, EOS_ID] = -1.0
        nxt = p.argmax(axis=1)
        for k in range(b):
            if not done[k]:
                if nxt[k] == EOS_ID:
                    done[k] = True
                else:
                    out[k].append(int(nxt[k]))
        if done.all():
            break
        state.prev_token = nxt
    return out
