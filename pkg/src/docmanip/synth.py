"""Seeded generator of basketball-like table/summary corpora.

Every summary is produced by a *style* (verbs, stat keywords, connectives,
openers, fixed intro and closing sentences, name form, which extra stat
types to report) applied to a *content selection* (players scoring at
least :data:`NOTABLE_POINTS`, or the top scorer).  Style and content are
drawn independently, so a summary of one table can serve as a style
reference for another.  Phrasing is kept within the extractor's window so
every reported stat is recoverable by :func:`extract_records_from_text`.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .data import SYNTH_TYPES, Instance, Table, tokenize, write_corpus


@dataclass(frozen=True)
class StatSpec:
    low: int
    high: int
    keywords: tuple[str, ...]
    verbs: tuple[str, ...]


STATS: dict[str, StatSpec] = {
    "PTS": StatSpec(0, 40, ("points",), ("scored", "poured in", "dropped", "put up", "finished with", "tallied")),
    "REB": StatSpec(0, 16, ("rebounds", "boards"), ("grabbed", "pulled down", "hauled in", "collected")),
    "AST": StatSpec(0, 14, ("assists", "dimes"), ("dished out", "handed out", "added", "recorded")),
    "STL": StatSpec(0, 6, ("steals",), ("recorded", "came up with", "swiped")),
    "BLK": StatSpec(0, 6, ("blocks", "rejections"), ("registered", "swatted", "tallied")),
    "MIN": StatSpec(10, 45, ("minutes",), ("played", "logged")),
    "FG3M": StatSpec(0, 8, ("threes", "triples"), ("hit", "knocked down", "drained")),
    "FTM": StatSpec(0, 12, ("free-throws",), ("made", "converted")),
    "FGM": StatSpec(0, 15, ("baskets", "field-goals"), ("made", "connected on")),
    "TOV": StatSpec(0, 7, ("turnovers",), ("committed", "coughed up")),
    "PF": StatSpec(0, 6, ("fouls",), ("picked up", "committed")),
    "OREB": StatSpec(0, 6, ("offensive-rebounds",), ("grabbed", "secured")),
}

FIRST_NAMES = (
    "aaron", "blake", "carl", "dwight", "eric", "frank", "gary", "harold", "isaiah", "jamal",
    "kyle", "lance", "marcus", "nick", "otto", "paul", "quincy", "ryan", "seth", "tony",
    "victor", "wesley", "xavier", "zach", "andre", "bruce", "cedric", "derrick", "elton", "felix",
)
LAST_NAMES = (
    "adams", "barnes", "carter", "dixon", "ellis", "fisher", "gordon", "harris", "irving", "jordan",
    "knight", "lowry", "miller", "nash", "oliver", "parker", "quinn", "rivers", "smith", "turner",
    "upton", "vaughn", "walker", "young", "zeller", "allen", "bryant", "curry", "duncan", "ewing",
    "foster", "green", "hill", "james", "kidd", "love", "martin", "noel", "odom", "payton",
)
INTROS = (
    "the crowd was on its feet all night long .",
    "it was a hard fought battle from start to finish .",
    "both teams came out firing in the opening quarter .",
    "the home fans were treated to a thriller tonight .",
    "defense was the story of this one .",
    "the visitors had no answer in the second half .",
    "this game was decided in the final minutes .",
    "neither side could pull away early on .",
)
CLOSINGS = (
    "the two sides meet again next week .",
    "the win keeps the streak alive .",
    "the coach praised the effort after the game .",
    "they will look to bounce back on friday .",
    "the rematch should be a good one .",
    "next up is a tough road trip .",
)
OPENERS = ("meanwhile ,", "also ,", "in addition ,", "elsewhere ,", "on the other end ,", "off the bench ,")
CONNECTIVES = (",", "and", "plus", "along with", "to go with")
ALSO_WORDS = ("also", "additionally", "then")
NOTABLE_POINTS = 15


@dataclass(frozen=True)
class Style:
    full_names: bool
    verbs: dict
    keywords: dict
    connective: str
    also_word: str
    openers: tuple[str, ...]
    intro: str
    closing: str
    extra_types: tuple[str, ...]


def sample_style(rng: random.Random, stat_types: Sequence[str]) -> Style:
    extras = [t for t in stat_types if t != "PTS"]
    k = rng.randint(min(1, len(extras)), min(2, len(extras)))
    return Style(
        full_names=rng.random() < 0.5,
        verbs={t: rng.choice(STATS[t].verbs) for t in stat_types},
        keywords={t: rng.choice(STATS[t].keywords) for t in stat_types},
        connective=rng.choice(CONNECTIVES),
        also_word=rng.choice(ALSO_WORDS),
        openers=tuple(rng.sample(OPENERS, 2)),
        intro=rng.choice(INTROS),
        closing=rng.choice(CLOSINGS),
        extra_types=tuple(sorted(rng.sample(extras, k), key=stat_types.index)),
    )


def sample_table(rng: random.Random, n_rows: int, n_types: int) -> Table:
    if n_rows < 1 or n_types < 2:
        raise ValueError("need n_rows >= 1 and n_types >= 2")
    if n_types > len(SYNTH_TYPES):
        raise ValueError(f"at most {len(SYNTH_TYPES)} types available")
    if n_rows > min(len(FIRST_NAMES), len(LAST_NAMES)):
        raise ValueError("not enough distinct names for that many rows")
    types = SYNTH_TYPES[:n_types]
    firsts = rng.sample(FIRST_NAMES, n_rows)
    lasts = rng.sample(LAST_NAMES, n_rows)
    cells = []
    for first, last in zip(firsts, lasts):
        entity = f"{first.title()} {last.title()}"
        feature = rng.choice(("home", "visiting"))
        for t in types:
            value = last if t == "NAME" else str(rng.randint(STATS[t].low, STATS[t].high))
            cells.append({"entity": entity, "type": t, "value": value, "feature": feature})
    return Table.from_cells(cells)


def select_rows(table: Table) -> list[int]:
    """Rows a summary reports: notable scorers in row order, else the top scorer."""
    j = table.types.index("PTS")
    pts = [int(table.cell(i, j).value) for i in range(table.n_rows)]
    rows = [i for i, p in enumerate(pts) if p >= NOTABLE_POINTS]
    return rows or [max(range(table.n_rows), key=lambda i: (pts[i], -i))]


def render_summary(table: Table, style: Style) -> list[str]:
    stat_types = [t for t in table.types if t != "NAME"]
    report = [t for t in ("PTS", *style.extra_types) if t in stat_types]
    words = [style.intro]
    for k, i in enumerate(select_rows(table)):
        row = {r.rtype: r for r in table.row(i)}
        name = row["NAME"].entity.lower() if style.full_names else row["NAME"].value
        stats = [(t, row[t].value) for t in report]
        opener = "" if k == 0 else style.openers[k % 2] + " "
        head, rest = stats[:2], stats[2:]
        clause = f"{name} {style.verbs[head[0][0]]} {head[0][1]} {style.keywords[head[0][0]]}"
        if len(head) > 1:
            clause += f" {style.connective} {head[1][1]} {style.keywords[head[1][0]]}"
        words.append(f"{opener}{clause} .")
        for t, v in rest:
            words.append(f"{name} {style.also_word} {style.verbs[t]} {v} {style.keywords[t]} .")
    words.append(style.closing)
    return tokenize(" ".join(words))


def synth_corpus(seed: int, n_instances: int, n_rows: int, n_types: int, prefix: str = "synth") -> list[Instance]:
    """Generate ``n_instances`` instances; identical arguments give identical output."""
    if n_instances < 0:
        raise ValueError("n_instances must be non-negative")
    rng = random.Random(seed)
    out = []
    for k in range(n_instances):
        x = sample_table(rng, n_rows, n_types)
        x_prime = sample_table(rng, n_rows, n_types)
        stat_types = [t for t in x.types if t != "NAME"]
        y_aux = render_summary(x, sample_style(rng, stat_types))
        y_prime = render_summary(x_prime, sample_style(rng, stat_types))
        out.append(Instance(f"{prefix}-{k:05d}", x, y_prime, x_prime, y_aux))
    return out


def write_splits(
    out_dir, instances: Sequence[Instance], fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> dict[str, int]:
    """Write ``train/dev/test.jsonl`` in generation order; returns split sizes."""
    n = len(instances)
    n_train = int(round(fractions[0] * n))
    n_dev = int(round(fractions[1] * n))
    splits = {
        "train": instances[:n_train],
        "dev": instances[n_train : n_train + n_dev],
        "test": instances[n_train + n_dev :],
    }
    out_dir = Path(out_dir)
    for name, items in splits.items():
        write_corpus(out_dir / f"{name}.jsonl", items)
    return {k: len(v) for k, v in splits.items()}
