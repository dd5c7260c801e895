"""Beam search with length-normalised scores.

Hypotheses are ranked by cumulative log-probability divided by the number
of scored tokens (EOS included when emitted).  EOS is blocked until
``min_len`` tokens exist; a hypothesis reaching ``max_len`` tokens is
closed without an EOS.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..autodiff import Tensor, no_grad
from ..data import BOS_ID, EOS_ID, Table
from .decoder import DecoderState, decode_step, init_decoder_state

DEFAULT_BEAM, DEFAULT_MIN_LEN, DEFAULT_MAX_LEN = 5, 150, 850


@dataclass
class Hypothesis:
    tokens: list[int]
    logp: float
    n_scored: int
    trace: list[Any] = field(default_factory=list)

    @property
    def score(self) -> float:
        return self.logp / max(self.n_scored, 1)


@dataclass
class GenerationResult:
    tokens: list[str]
    score: float
    beams: list[tuple[list[str], float]]
    trace: list[dict]


StepFn = Callable[[Any, np.ndarray], tuple[np.ndarray, Any, list | None]]


def beam_search_core(
    step_fn: StepFn,
    reorder: Callable[[Any, list[int]], Any],
    init_state: Any,
    beam: int,
    min_len: int,
    max_len: int,
    eos: int = EOS_ID,
    bos: int = BOS_ID,
) -> list[Hypothesis]:
    """Generic beam search; returns finished hypotheses, best first.

    ``step_fn(state, prev_tokens)`` gives (log-probs (n, V), next state,
    optional per-row trace entries) for the n live hypotheses.
    """
    if beam < 1 or max_len < 1:
        raise ValueError("beam and max_len must be positive")
    active = [Hypothesis([], 0.0, 0)]
    state = init_state
    finished: list[Hypothesis] = []
    for t in range(max_len):
        prev = np.array([h.tokens[-1] if h.tokens else bos for h in active], dtype=np.int64)
        logp, nxt_state, aux = step_fn(state, prev)
        logp = np.array(logp, dtype=np.float64)
        if t < min_len:
            logp[:, eos] = -np.inf
        totals = np.array([h.logp for h in active])[:, None] + logp
        flat = np.argsort(-totals, axis=None, kind="stable")
        new_active: list[Hypothesis] = []
        rows: list[int] = []
        for f in flat:
            i, v = divmod(int(f), logp.shape[1])
            s = float(totals[i, v])
            if not np.isfinite(s):
                break
            h = active[i]
            trace = h.trace + ([aux[i] | {"token": v}] if aux is not None else [])
            if v == eos:
                finished.append(Hypothesis(list(h.tokens), s, h.n_scored + 1, trace))
                continue
            hyp = Hypothesis(h.tokens + [v], s, h.n_scored + 1, trace)
            if len(hyp.tokens) >= max_len:
                finished.append(hyp)
                continue
            new_active.append(hyp)
            rows.append(i)
            if len(new_active) == beam:
                break
        if len(finished) >= beam or not new_active:
            break
        active = new_active
        state = reorder(nxt_state, rows)
    finished.sort(key=lambda h: -h.score)
    return finished


def beam_search(model, x: Table, y_prime, beam: int = DEFAULT_BEAM, min_len: int = DEFAULT_MIN_LEN, max_len: int = DEFAULT_MAX_LEN) -> GenerationResult:
    """Decode one instance; ``beam=1`` is greedy argmax decoding."""
    params, inter_att, vocab = model.params, model.cfg.inter_att, model.vocab
    with no_grad(), model.eval_mode():
        enc = model.encode(model.batch([x], [y_prime]))
        values = enc.copy_map[0].argmax(axis=1)

        def step(state: DecoderState, prev: np.ndarray):
            state.prev_token = prev
            dist, new = decode_step(params, state, enc, inter_att)
            p = dist.P.data
            with np.errstate(divide="ignore"):
                logp = np.log(p)
            aux = []
            for k in range(p.shape[0]):
                o = int(dist.alpha.data[k].argmax())
                aux.append({"copy_gate": float(dist.g.data[k, 0]), "attended_record": o,
                            "attended_value": vocab.itos[int(values[o])]})
            return logp, new, aux

        def reorder(state: DecoderState, rows):
            rows = np.asarray(rows)
            return DecoderState(Tensor(state.h.data[rows]), Tensor(state.c.data[rows]), state.step, state.prev_token[rows])

        hyps = beam_search_core(step, reorder, init_decoder_state(params, enc.records), beam, min_len, max_len)
    best = hyps[0]
    trace = [dict(e, token=vocab.itos[e["token"]]) for e in best.trace]
    return GenerationResult(
        vocab.decode(best.tokens), best.score, [(vocab.decode(h.tokens), h.score) for h in hyps], trace
    )
