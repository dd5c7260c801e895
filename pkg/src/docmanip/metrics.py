"""Style BLEU, content fidelity (CF) and content selection (CS).

Corpus BLEU pools clipped n-gram counts and lengths over all pairs before
taking precisions, so it is not an average of sentence scores.  CF and CS
likewise pool their set counts across the corpus (micro averaging); the
CF count is the mean number of unique correct records per output.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from .data import Table, entity_tokens
from .extraction import DEFAULT_WINDOW, ExtractedRecord, extract_mentions, extract_records_from_text

MASK = "<rec>"


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(candidate: Sequence[str], reference: Sequence[str], max_n: int = 4) -> list[int]:
    """[c_len, r_len, match_1, total_1, ..., match_n, total_n] for one pair."""
    out = [len(candidate), len(reference)]
    for n in range(1, max_n + 1):
        cand, ref = _ngrams(candidate, n), _ngrams(reference, n)
        out += [sum(min(c, ref[g]) for g, c in cand.items()), max(len(candidate) - n + 1, 0)]
    return out


def bleu(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]], max_n: int = 4) -> float:
    """Corpus BLEU on a 0-100 scale, no smoothing, single reference per candidate."""
    if len(candidates) == 0:
        raise ValueError("bleu needs at least one candidate")
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates vs {len(references)} references")
    totals = [0] * (2 + 2 * max_n)
    for c, r in zip(candidates, references):
        totals = [a + b for a, b in zip(totals, bleu_stats(c, r, max_n))]
    c_len, r_len = totals[0], totals[1]
    if c_len == 0:
        return 0.0
    log_p = 0.0
    for n in range(max_n):
        match, total = totals[2 + 2 * n], totals[3 + 2 * n]
        if match == 0 or total == 0:
            return 0.0
        log_p += math.log(match / total) / max_n
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return 100.0 * bp * math.exp(log_p)


def mask_records(tokens: Sequence[str], table: Table, window: int = DEFAULT_WINDOW) -> list[str]:
    """Replace extracted value tokens and entity-name tokens with a placeholder."""
    names = {t for e in table.entities for t in entity_tokens(e)}
    hits = {m.pos for m in extract_mentions(tokens, table, window)}
    return [MASK if (p in hits or t in names) else t for p, t in enumerate(tokens)]


def _prf(hit: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    p = 100.0 * hit / n_pred if n_pred else 0.0
    r = 100.0 * hit / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def content_fidelity(z: Sequence[str], x: Table, window: int = DEFAULT_WINDOW) -> tuple[float, int]:
    """(precision %, count) of unique records extracted from z that are in x."""
    extracted = extract_records_from_text(z, x, window)
    correct = len(extracted & set(x.triples()))
    return (100.0 * correct / len(extracted) if extracted else 0.0), correct


def content_selection(
    z: Sequence[str], y_aux: Sequence[str], x: Table, x_gold: Table | None = None, window: int = DEFAULT_WINDOW
) -> tuple[float, float, float]:
    """(P, R, F) % of records in z against records in y_aux."""
    ez = extract_records_from_text(z, x, window)
    ea = extract_records_from_text(y_aux, x if x_gold is None else x_gold, window)
    return _prf(len(ez & ea), len(ez), len(ea))


@dataclass(frozen=True)
class MetricReport:
    style_bleu: float
    cf_precision: float
    cf_count: float
    cs_precision: float
    cs_recall: float
    cs_f1: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def format_table(self) -> str:
        head = f"{'CF%':>7} {'CF#':>7} {'CS-P%':>7} {'CS-R%':>7} {'CS-F%':>7} {'BLEU':>7}"
        row = (f"{self.cf_precision:7.2f} {self.cf_count:7.2f} {self.cs_precision:7.2f} "
               f"{self.cs_recall:7.2f} {self.cs_f1:7.2f} {self.style_bleu:7.2f}")
        return f"{head}\n{row}"


def evaluate(
    outputs: Sequence[Sequence[str]],
    tables: Sequence[Table],
    references: Sequence[Sequence[str]],
    reference_tables: Sequence[Table] | None = None,
    aux: Sequence[Sequence[str]] | None = None,
    mask: bool = False,
    window: int = DEFAULT_WINDOW,
) -> MetricReport:
    """Corpus-level report.

    ``references`` are the style references y' (with their tables x' when
    ``mask`` is set); ``aux`` are the y_aux summaries for CS (CS is 0 when
    absent).
    """
    n = len(outputs)
    if n == 0:
        raise ValueError("nothing to evaluate")
    if not (len(tables) == len(references) == n):
        raise ValueError("outputs, tables and references must align")
    if mask:
        if reference_tables is None:
            raise ValueError("masked BLEU needs the reference tables")
        cands = [mask_records(o, t, window) for o, t in zip(outputs, tables)]
        refs = [mask_records(r, t, window) for r, t in zip(references, reference_tables)]
    else:
        cands, refs = list(outputs), list(references)
    style = bleu(cands, refs)

    n_ext = n_correct = 0
    sel_hit = sel_pred = sel_gold = 0
    for k, (z, x) in enumerate(zip(outputs, tables)):
        ez = extract_records_from_text(z, x, window)
        n_ext += len(ez)
        n_correct += len(ez & set(x.triples()))
        if aux is not None:
            ea: set[ExtractedRecord] = extract_records_from_text(aux[k], x, window)
            sel_hit += len(ez & ea)
            sel_pred += len(ez)
            sel_gold += len(ea)
    cf_p = 100.0 * n_correct / n_ext if n_ext else 0.0
    cs_p, cs_r, cs_f = _prf(sel_hit, sel_pred, sel_gold)
    return MetricReport(style, cf_p, n_correct / n, cs_p, cs_r, cs_f, n)
