from __future__ import annotations

import contextlib
from typing import Iterator, Sequence

import numpy as np

from ..autodiff import Tensor, no_grad, ops
from ..data import Table, Vocab
from .batch import Batch, make_batch
from .decoder import Encoded, StepDistribution, copy_map, greedy_decode, teacher_forced
from .encoders import encode_reference, encode_table
from .interactive import interactive_attention
from .params import ModelConfig, init_params


class Model:
    """Parameters, vocabulary and dropout state of one text-manipulation model."""

    def __init__(self, cfg: ModelConfig, vocab: Vocab, rng: np.random.Generator, params: dict[str, Tensor] | None = None):
        if cfg.vocab_size != len(vocab):
            raise ValueError("config vocab_size does not match the vocabulary")
        self.cfg = cfg
        self.vocab = vocab
        self.rng = rng
        self.params = params if params is not None else init_params(cfg, rng)
        self.training = False

    @contextlib.contextmanager
    def eval_mode(self) -> Iterator[None]:
        old = self.training
        self.training = False
        try:
            yield
        finally:
            self.training = old

    def dropout(self, t: Tensor) -> Tensor:
        return ops.dropout(t, self.cfg.dropout, self.rng, self.training)

    def batch(self, tables: Sequence[Table], references, targets=None) -> Batch:
        return make_batch(tables, references, self.vocab, targets)

    def encode(self, batch: Batch) -> Encoded:
        p = self.params
        records = encode_table(p, batch.rec_ids, batch.n_rows, batch.n_cols, batch.rec_index, batch.rec_mask, self.dropout)
        reference = encode_reference(p, batch.ref_ids, batch.ref_len, self.dropout)
        fusion = None
        if self.cfg.inter_att:
            fusion = interactive_attention(
                records.R, reference.W, p, batch.rec_mask, reference.mask, batch.n_records
            )
        cmap = copy_map(batch.value_ids, batch.rec_mask, len(self.vocab))
        return Encoded(records, reference, fusion, cmap)

    def teacher_forced(self, batch: Batch) -> StepDistribution:
        if batch.dec_in is None:
            raise ValueError("batch has no targets")
        return teacher_forced(self.params, batch.dec_in, self.encode(batch), self.cfg.inter_att, self.dropout)

    def nll(self, batch: Batch) -> Tensor:
        """Mean per-token negative log-likelihood of the batch targets."""
        dist = self.teacher_forced(batch)
        return ops.masked_cross_entropy(dist.P, batch.dec_out, batch.dec_mask)

    def token_accuracy(self, batch: Batch) -> tuple[int, int]:
        """(correct, total) argmax predictions under teacher forcing."""
        with no_grad(), self.eval_mode():
            dist = self.teacher_forced(batch)
        pred = dist.P.data.argmax(axis=-1)
        m = batch.dec_mask > 0
        return int(((pred == batch.dec_out) & m).sum()), int(m.sum())

    def teacher_forced_predictions(self, batch: Batch) -> list[list[str]]:
        with no_grad(), self.eval_mode():
            dist = self.teacher_forced(batch)
        pred = dist.P.data.argmax(axis=-1)
        lens = batch.dec_mask.sum(axis=1).astype(int)
        return [self.vocab.decode(pred[k, : lens[k]].tolist()) for k in range(batch.size)]

    def greedy(self, tables, references, max_len: int, min_len: int = 0) -> list[list[str]]:
        batch = self.batch(tables, references)
        with no_grad(), self.eval_mode():
            ids = greedy_decode(self.params, self.encode(batch), self.cfg.inter_att, max_len, min_len)
        return [self.vocab.decode(s) for s in ids]
