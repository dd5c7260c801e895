"""Rule-based record extraction and type-based reference retrieval.

Extraction matches text against a candidate table.  A numeric token at
position ``p`` yields the record ``(entity, type, value)`` when

* a stat keyword from :data:`LEXICON` sits within ``type_window`` tokens of
  ``p`` in the same sentence (closest wins, the following token first), and
* a mention of a candidate entity (any token of its name) sits within
  ``window`` tokens of ``p`` in the same sentence (closest preceding mention
  wins, otherwise the closest following one).

The value need not match the table, so extracted records can be wrong;
content metrics rely on exactly that.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .data import Instance, Table, entity_tokens

LEXICON: dict[str, tuple[str, ...]] = {
    "points": ("PTS",),
    "rebounds": ("REB",),
    "boards": ("REB",),
    "assists": ("AST",),
    "dimes": ("AST",),
    "steals": ("STL",),
    "blocks": ("BLK",),
    "rejections": ("BLK",),
    "minutes": ("MIN",),
    "threes": ("FG3M",),
    "triples": ("FG3M",),
    "free-throws": ("FTM",),
    "baskets": ("FGM",),
    "field-goals": ("FGM",),
    "turnovers": ("TOV", "TO"),
    "fouls": ("PF",),
    "offensive-rebounds": ("OREB",),
}
SENTENCE_END = frozenset({".", "!", "?"})
DEFAULT_WINDOW = 10
TYPE_WINDOW = 3
_NUMBER = re.compile(r"^\d+(?:\.\d+)?$")


class ExtractedRecord(NamedTuple):
    entity: str
    rtype: str
    value: str


@dataclass(frozen=True)
class Mention:
    """An extracted record together with where its value and entity occur."""

    pos: int
    entity_pos: int
    record: ExtractedRecord


def _entity_index(table: Table) -> dict[str, str]:
    owners: dict[str, set[str]] = {}
    for ent in table.entities:
        for tok in entity_tokens(ent):
            owners.setdefault(tok, set()).add(ent)
    return {tok: next(iter(ents)) for tok, ents in owners.items() if len(ents) == 1}


def _sentence_ids(tokens: Sequence[str]) -> list[int]:
    ids, s = [], 0
    for tok in tokens:
        ids.append(s)
        if tok in SENTENCE_END:
            s += 1
    return ids


def entity_mentions(tokens: Sequence[str], table: Table) -> dict[int, str]:
    """Positions of tokens that name a candidate entity."""
    index = _entity_index(table)
    return {p: index[t] for p, t in enumerate(tokens) if t in index}


def extract_mentions(tokens: Sequence[str], table: Table, window: int = DEFAULT_WINDOW) -> list[Mention]:
    tokens = list(tokens)
    if not tokens:
        return []
    sent = _sentence_ids(tokens)
    ents = entity_mentions(tokens, table)
    table_types = set(table.types)
    out = []
    for p, tok in enumerate(tokens):
        if not _NUMBER.match(tok):
            continue
        rtype = None
        for dist in range(1, TYPE_WINDOW + 1):
            for q in (p + dist, p - dist):
                if 0 <= q < len(tokens) and sent[q] == sent[p] and tokens[q] in LEXICON:
                    cands = LEXICON[tokens[q]]
                    rtype = next((t for t in cands if t in table_types), cands[0])
                    break
            if rtype is not None:
                break
        if rtype is None:
            continue
        epos = None
        for q in range(p - 1, max(-1, p - window - 1), -1):
            if sent[q] != sent[p]:
                break
            if q in ents:
                epos = q
                break
        if epos is None:
            for q in range(p + 1, min(len(tokens), p + window + 1)):
                if sent[q] != sent[p]:
                    break
                if q in ents:
                    epos = q
                    break
        if epos is None:
            continue
        out.append(Mention(p, epos, ExtractedRecord(ents[epos], rtype, tok)))
    return out


def extract_records_from_text(tokens: Sequence[str], candidates: Table, window: int = DEFAULT_WINDOW) -> set[ExtractedRecord]:
    """Unique records mentioned in ``tokens``, matched against ``candidates``."""
    return {m.record for m in extract_mentions(tokens, candidates, window)}


def _types_of(inst: Instance, window: int) -> Counter:
    if inst.y_aux is None:
        raise ValueError(f"{inst.id}: type-based retrieval needs the auxiliary summary")
    return Counter(r.rtype for r in extract_records_from_text(inst.y_aux, inst.x, window))


def _multiset_jaccard(a: Counter, b: Counter) -> float:
    union = sum((a | b).values())
    return sum((a & b).values()) / union if union else 0.0


def retrieve_reference(
    target: Instance,
    pool: Sequence[Instance],
    window: int = DEFAULT_WINDOW,
    type_cache: dict[str, Counter] | None = None,
) -> Instance:
    """Pool instance whose summary covers the target's record types best.

    Score: size of the type-set intersection, then multiset Jaccard over the
    extracted type counts, then the smaller id.  The target itself (same id)
    is never returned.
    """
    cache = {} if type_cache is None else type_cache

    def types(inst):
        if inst.id not in cache:
            cache[inst.id] = _types_of(inst, window)
        return cache[inst.id]

    want = types(target)
    best_key, best = None, None
    for cand in pool:
        if cand.id == target.id:
            continue
        have = types(cand)
        key = (len(set(want) & set(have)), _multiset_jaccard(want, have))
        if best is None or key > best_key or (key == best_key and cand.id < best.id):
            best_key, best = key, cand
    if best is None:
        raise ValueError(f"{target.id}: empty retrieval pool")
    return best


def build_dataset(
    instances: Sequence[Instance], window: int = DEFAULT_WINDOW, pool: Sequence[Instance] | None = None
) -> list[Instance]:
    """Pair every (x, y_aux) with a retrieved reference (y', x').

    References come from ``pool`` (default: the other instances themselves).
    """
    cache: dict[str, Counter] = {}
    pool = instances if pool is None else pool
    out = []
    for inst in instances:
        ref = retrieve_reference(inst, pool, window, cache)
        out.append(Instance(inst.id, inst.x, list(ref.y_aux), ref.x, list(inst.y_aux)))
    return out
