"""Reference encoder and two-level hierarchical record encoder.

Banks use a feature-major layout with a leading batch axis: a bank of P
positions with width w is a (B, w, P) tensor, so ``R`` is (B, 2d, L_x) and
``W`` is (B, 2d, K).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..autodiff import Tensor, bilstm_encode, ops
from .params import lstm_weights

Identity: Callable[[Tensor], Tensor] = lambda t: t  # noqa: E731


@dataclass
class RecordBank:
    R: Tensor  # (B, 2d, L_x) packed row-major, o = i*M + j
    row_reps: Tensor  # (B, N, 2d)
    table_rep: Tensor  # (B, 2d)
    mask: np.ndarray  # (B, L_x)


@dataclass
class ReferenceBank:
    W: Tensor  # (B, 2d, K)
    mask: np.ndarray  # (B, K)


def encode_reference(params, ref_ids: np.ndarray, ref_len: np.ndarray, dropout=Identity) -> ReferenceBank:
    ref_ids = np.asarray(ref_ids)
    if ref_ids.ndim != 2 or ref_ids.shape[1] == 0 or np.any(np.asarray(ref_len) < 1):
        raise ValueError("encode_reference needs a non-empty reference")
    emb = dropout(ops.embedding(params["emb"], ref_ids))
    states, _, _ = bilstm_encode(emb, lstm_weights(params, "ref.f"), lstm_weights(params, "ref.b"), ref_len)
    mask = (np.arange(ref_ids.shape[1])[None, :] < np.asarray(ref_len)[:, None]).astype(float)
    return ReferenceBank(ops.swapaxes(states, 1, 2), mask)


def encode_table(params, rec_ids, n_rows, n_cols, rec_index, rec_mask, dropout=Identity) -> RecordBank:
    """Record-level bi-LSTM along each row, then a row-level bi-LSTM over row vectors.

    Each record starts as the 4d concatenation of its entity, type, value and
    feature embeddings.  A row vector is [last forward state ; first backward
    state] of its records; the table vector is the same construction one
    level up.
    """
    b, nmax, mmax, _ = rec_ids.shape
    d = params["emb"].shape[1]
    emb = ops.embedding(params["emb"], rec_ids)  # (B, N, M, 4, d)
    cells = dropout(ops.reshape(emb, (b * nmax, mmax, 4 * d)))
    col_len = np.repeat(np.asarray(n_cols), nmax)
    states, last_f, first_b = bilstm_encode(cells, lstm_weights(params, "rec.f"), lstm_weights(params, "rec.b"), col_len)

    grid = ops.reshape(states, (b, nmax * mmax, 2 * d))
    packed = ops.gather(grid, np.asarray(rec_index)[:, :, None], axis=1)  # (B, L, 2d)
    R = ops.swapaxes(packed, 1, 2)

    row_vecs = ops.reshape(ops.concat([last_f, first_b], axis=-1), (b, nmax, 2 * d))
    row_reps, row_f, row_b = bilstm_encode(row_vecs, lstm_weights(params, "row.f"), lstm_weights(params, "row.b"), n_rows)
    table_rep = ops.concat([row_f, row_b], axis=-1)
    return RecordBank(R, row_reps, table_rep, np.asarray(rec_mask, dtype=float))


def initial_record_representation(params, rec_ids: np.ndarray) -> Tensor:
    """The (…, 4d) concatenated [entity; type; value; feature] embedding."""
    emb = ops.embedding(params["emb"], rec_ids)
    d = params["emb"].shape[1]
    return ops.reshape(emb, rec_ids.shape[:-1] + (4 * d,))
