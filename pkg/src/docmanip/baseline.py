"""Rule-based slot filling.

Record values and entity names found in the reference y' (matched against
its own table x') become slots.  Each slot is refilled from the source
table x: entities are aligned by row index, types by column name.  All
other tokens are copied verbatim, so the output has the length of y'.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .data import Table, entity_tokens
from .extraction import DEFAULT_WINDOW, entity_mentions, extract_mentions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Slot:
    pos: int
    entity: str  # entity of x' the slot refers to
    rtype: str | None  # None for an entity-name slot
    name_index: int = 0  # which token of the entity name


def slotted_template(y_prime: Sequence[str], x_prime: Table, window: int = DEFAULT_WINDOW) -> list[Slot]:
    slots = {m.pos: Slot(m.pos, m.record.entity, m.record.rtype) for m in extract_mentions(y_prime, x_prime, window)}
    for p, ent in entity_mentions(y_prime, x_prime).items():
        if p not in slots:
            slots[p] = Slot(p, ent, None, entity_tokens(ent).index(y_prime[p]))
    return [slots[p] for p in sorted(slots)]


def entity_alignment(x_prime: Table, x: Table) -> dict[str, str]:
    """Map x' entities to x entities of the same row index."""
    return {e: x.entities[i] for i, e in enumerate(x_prime.entities) if i < x.n_rows}


def _fill(slot: Slot, target: str | None, x: Table) -> str | None:
    if target is None:
        return None
    if slot.rtype is None:
        src, dst = entity_tokens(slot.entity), entity_tokens(target)
        if len(src) == len(dst):
            return dst[slot.name_index]
        # differing name lengths: keep the role of the token (last name stays last)
        return dst[-1] if slot.name_index == len(src) - 1 else dst[0]
    rec = x.lookup(target, slot.rtype)
    return None if rec is None else rec.value.lower()


def rule_sf(x: Table, y_prime: Sequence[str], x_prime: Table, window: int = DEFAULT_WINDOW) -> list[str]:
    out = list(y_prime)
    align = entity_alignment(x_prime, x)
    for slot in slotted_template(y_prime, x_prime, window):
        value = _fill(slot, align.get(slot.entity), x)
        if value is None:
            log.info("rule-sf: no mapping for slot %s at %d, keeping %r", slot.rtype or "NAME", slot.pos, out[slot.pos])
            continue
        out[slot.pos] = value
    return out
