"""Interactive (co-)attention between the record bank and the reference bank.

With R (2d x L_x) and W (2d x K), per instance:

    L   = R^T W                     (L_x x K)
    A_W = softmax of L over records (each word's column sums to 1)
    A_R = softmax of L^T over words (each record's column sums to 1)
    C_W = R A_W                     (2d x K)
    C_R = [W ; C_W] A_R             (4d x L_x)
    F   = biLSTM over the columns of C_R   (2d x L_x)

All functions accept an optional leading batch axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, bilstm_encode, ops
from .params import lstm_weights


@dataclass
class FusionBank:
    L: Tensor
    A_W: Tensor
    A_R: Tensor
    C_W: Tensor
    C_R: Tensor
    F: Tensor

    def diagnostics(self, k: int = 0) -> dict:
        """Attention matrices of batch item ``k`` as nested lists, records along axis 0."""
        pick = (lambda t: t.data[k]) if self.L.ndim == 3 else (lambda t: t.data)
        return {"L": pick(self.L).tolist(), "A_W": pick(self.A_W).tolist(), "A_R": pick(self.A_R).tolist()}


def compute_affinity(R, W) -> Tensor:
    R, W = ops.as_tensor(R), ops.as_tensor(W)
    if R.shape[-2] != W.shape[-2]:
        raise ValueError(f"affinity needs matching widths, got R {R.shape} and W {W.shape}")
    return ops.matmul(ops.swapaxes(R, -1, -2), W)


def coattend(R, W, L, rec_mask=None, word_mask=None):
    """Return (A_W, A_R, C_W, C_R) for affinity ``L``.

    ``rec_mask`` (…, L_x) and ``word_mask`` (…, K) exclude padding from the
    normalisations.
    """
    R, W, L = ops.as_tensor(R), ops.as_tensor(W), ops.as_tensor(L)
    rm = None if rec_mask is None else np.asarray(rec_mask)[..., :, None]
    wm = None if word_mask is None else np.asarray(word_mask)[..., :, None]
    A_W = ops.softmax(L, axis=-2, mask=rm)
    A_R = ops.softmax(ops.swapaxes(L, -1, -2), axis=-2, mask=wm)
    C_W = ops.matmul(R, A_W)
    C_R = ops.matmul(ops.concat([W, C_W], axis=-2), A_R)
    return A_W, A_R, C_W, C_R


def fuse_bank(C_R, params, n_records=None) -> Tensor:
    """Bi-LSTM over the L_x columns of C_R, returned as (…, 2d, L_x)."""
    C_R = ops.as_tensor(C_R)
    squeeze = C_R.ndim == 2
    if squeeze:
        C_R = ops.reshape(C_R, (1,) + C_R.shape)
    seq = ops.swapaxes(C_R, 1, 2)
    states, _, _ = bilstm_encode(seq, lstm_weights(params, "fuse.f"), lstm_weights(params, "fuse.b"), n_records)
    F = ops.swapaxes(states, 1, 2)
    if squeeze:
        F = ops.reshape(F, F.shape[1:])
    return F


def interactive_attention(R, W, params, rec_mask=None, word_mask=None, n_records=None) -> FusionBank:
    L = compute_affinity(R, W)
    A_W, A_R, C_W, C_R = coattend(R, W, L, rec_mask, word_mask)
    F = fuse_bank(C_R, params, n_records)
    return FusionBank(L, A_W, A_R, C_W, C_R, F)
