"""Padding a list of (table, reference, target) triples into index arrays."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data import BOS_ID, EOS_ID, PAD_ID, Table, Vocab, record_tokens


@dataclass
class Batch:
    size: int
    rec_ids: np.ndarray  # (B, N, M, 4) token ids of entity/type/value/feature
    n_rows: np.ndarray  # (B,)
    n_cols: np.ndarray  # (B,)
    rec_index: np.ndarray  # (B, L) flat N*M grid index of packed record o
    rec_mask: np.ndarray  # (B, L)
    value_ids: np.ndarray  # (B, L) vocab id of each record's value
    ref_ids: np.ndarray  # (B, K)
    ref_len: np.ndarray  # (B,)
    dec_in: np.ndarray | None = None  # (B, T) BOS + target
    dec_out: np.ndarray | None = None  # (B, T) target + EOS
    dec_mask: np.ndarray | None = None  # (B, T)

    @property
    def n_records(self) -> np.ndarray:
        return self.n_rows * self.n_cols

    @property
    def word_mask(self) -> np.ndarray:
        return (np.arange(self.ref_ids.shape[1])[None, :] < self.ref_len[:, None]).astype(float)


def make_batch(
    tables: Sequence[Table],
    references: Sequence[Sequence[str]],
    vocab: Vocab,
    targets: Sequence[Sequence[str]] | None = None,
) -> Batch:
    b = len(tables)
    if b == 0 or len(references) != b or (targets is not None and len(targets) != b):
        raise ValueError("batch needs equally many tables, references and targets")
    n_rows = np.array([t.n_rows for t in tables])
    n_cols = np.array([t.n_cols for t in tables])
    nmax, mmax = int(n_rows.max()), int(n_cols.max())
    lmax = int((n_rows * n_cols).max())
    rec_ids = np.full((b, nmax, mmax, 4), PAD_ID, dtype=np.int64)
    rec_index = np.zeros((b, lmax), dtype=np.int64)
    rec_mask = np.zeros((b, lmax))
    value_ids = np.full((b, lmax), PAD_ID, dtype=np.int64)
    for k, t in enumerate(tables):
        for o, r in enumerate(t.records):
            toks = vocab.encode(record_tokens(r))
            rec_ids[k, r.row, r.col] = toks
            rec_index[k, o] = r.row * mmax + r.col
            rec_mask[k, o] = 1.0
            value_ids[k, o] = toks[2]

    ref_len = np.array([len(r) for r in references])
    if np.any(ref_len == 0):
        raise ValueError("empty reference in batch")
    ref_ids = np.full((b, int(ref_len.max())), PAD_ID, dtype=np.int64)
    for k, r in enumerate(references):
        ref_ids[k, : len(r)] = vocab.encode(r)

    batch = Batch(b, rec_ids, n_rows, n_cols, rec_index, rec_mask, value_ids, ref_ids, ref_len)
    if targets is not None:
        tlen = np.array([len(t) for t in targets]) + 1
        steps = int(tlen.max())
        batch.dec_in = np.full((b, steps), PAD_ID, dtype=np.int64)
        batch.dec_out = np.full((b, steps), PAD_ID, dtype=np.int64)
        batch.dec_mask = np.zeros((b, steps))
        for k, t in enumerate(targets):
            ids = vocab.encode(t)
            batch.dec_in[k, : len(ids) + 1] = [BOS_ID] + ids
            batch.dec_out[k, : len(ids) + 1] = ids + [EOS_ID]
            batch.dec_mask[k, : len(ids) + 1] = 1.0
    return batch
