"""Records, tables, instances, corpus I/O and vocabulary.

Corpus files are JSON Lines, one instance per line::

    {"id": "train-00000",
     "table": [{"entity": "Lebron James", "type": "PTS", "value": "25", "feature": "home"}, ...],
     "table_prime": [...],          # table behind the reference (optional at test time)
     "reference": "james scored 25 points .",
     "aux": "..."}                  # summary written for ``table`` (optional at test time)

Cells of a table are listed row-major: all cells of one entity are
contiguous and every entity lists the same type sequence.
"""
from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
FEATURES = ("home", "visiting")
FEATURE_TOKENS = {"home": "<home>", "visiting": "<vis>"}

# Column types used by the synthetic generator, NAME first.
SYNTH_TYPES = (
    "NAME", "PTS", "REB", "AST", "STL", "BLK", "MIN", "FG3M", "FTM", "FGM", "TOV", "PF", "OREB",
)
# Player box-score columns of the ROTOWIRE corpus (for converted data).
ROTOWIRE_TYPES = (
    "PLAYER_NAME", "FIRST_NAME", "SECOND_NAME", "START_POSITION", "MIN", "PTS", "FGM", "FGA",
    "FG_PCT", "FG3M", "FG3A", "FG3_PCT", "FTM", "FTA", "FT_PCT", "OREB", "DREB", "REB", "AST",
    "TO", "STL", "BLK", "PF",
)
KNOWN_TYPES = frozenset(SYNTH_TYPES) | frozenset(ROTOWIRE_TYPES)

_TOKEN_RE = re.compile(r"\w+(?:[-./']\w+)*|[^\w\s]")


class CorpusError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase, then split on whitespace and punctuation (``25``, ``3-pt``, ``n/a`` stay whole)."""
    return _TOKEN_RE.findall(text.lower())


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class Record:
    entity: str
    rtype: str
    value: str
    feature: str
    row: int
    col: int

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.entity, self.rtype, self.value)


def entity_tokens(entity: str) -> list[str]:
    return tokenize(entity)


def entity_key(entity: str) -> str:
    """Token that stands for an entity in the shared embedding table (its last name token)."""
    toks = tokenize(entity)
    return toks[-1] if toks else UNK


@dataclass
class Table:
    """A row-major grid of records: one row per entity, one column per type."""

    records: list[Record]
    n_rows: int
    n_cols: int

    def __post_init__(self) -> None:
        if len(self.records) != self.n_rows * self.n_cols:
            raise CorpusError(f"table has {len(self.records)} records, expected {self.n_rows}x{self.n_cols}")

    @classmethod
    def from_cells(cls, cells: Sequence[dict], type_inventory=KNOWN_TYPES, where: str = "") -> "Table":
        rows: list[list[dict]] = []
        index: dict[str, int] = {}
        for k, cell in enumerate(cells):
            for key in ("entity", "type", "value", "feature"):
                if key not in cell or cell[key] is None:
                    raise CorpusError(f"{where}: cell {k} is missing field {key!r}")
            if type_inventory is not None and cell["type"] not in type_inventory:
                raise CorpusError(f"{where}: cell {k} has unknown type {cell['type']!r}")
            if cell["feature"] not in FEATURES:
                raise CorpusError(f"{where}: cell {k} has feature {cell['feature']!r}, expected one of {FEATURES}")
            ent = str(cell["entity"])
            if ent not in index:
                index[ent] = len(rows)
                rows.append([])
            elif index[ent] != len(rows) - 1:
                raise CorpusError(f"{where}: entity {ent!r} cells are not contiguous")
            rows[index[ent]].append(cell)
        if not rows:
            raise CorpusError(f"{where}: empty table")
        col_types = [c["type"] for c in rows[0]]
        if len(set(col_types)) != len(col_types):
            raise CorpusError(f"{where}: duplicate type in row 0")
        records = []
        for i, row in enumerate(rows):
            if [c["type"] for c in row] != col_types:
                raise CorpusError(f"{where}: row {i} has a different column type sequence")
            for j, c in enumerate(row):
                records.append(Record(str(c["entity"]), str(c["type"]), str(c["value"]), str(c["feature"]), i, j))
        return cls(records, len(rows), len(col_types))

    def to_cells(self) -> list[dict]:
        return [{"entity": r.entity, "type": r.rtype, "value": r.value, "feature": r.feature} for r in self.records]

    @property
    def size(self) -> int:
        return len(self.records)

    @property
    def types(self) -> list[str]:
        return [r.rtype for r in self.records[: self.n_cols]]

    @property
    def entities(self) -> list[str]:
        return [self.records[i * self.n_cols].entity for i in range(self.n_rows)]

    def row(self, i: int) -> list[Record]:
        return self.records[i * self.n_cols : (i + 1) * self.n_cols]

    def cell(self, i: int, j: int) -> Record:
        return self.records[i * self.n_cols + j]

    def lookup(self, entity: str, rtype: str) -> Record | None:
        try:
            i = self.entities.index(entity)
            j = self.types.index(rtype)
        except ValueError:
            return None
        return self.cell(i, j)

    def triples(self) -> set[tuple[str, str, str]]:
        return {r.triple for r in self.records}


def linearize_table(t: Table) -> list[tuple[int, Record]]:
    """Row-major (position, record) pairs with position ``o = i * M + j``."""
    return [(r.row * t.n_cols + r.col, r) for r in t.records]


def position_to_cell(o: int, n_cols: int) -> tuple[int, int]:
    return divmod(o, n_cols)


@dataclass
class Instance:
    id: str
    x: Table
    y_prime: list[str]
    x_prime: Table | None = None
    y_aux: list[str] | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "table": self.x.to_cells(),
            "table_prime": None if self.x_prime is None else self.x_prime.to_cells(),
            "reference": detokenize(self.y_prime),
            "aux": None if self.y_aux is None else detokenize(self.y_aux),
        }

    @classmethod
    def from_json(cls, obj: dict, type_inventory=KNOWN_TYPES) -> "Instance":
        iid = obj.get("id")
        if not iid:
            raise CorpusError("instance without an id")
        for key in ("table", "reference"):
            if key not in obj or obj[key] is None:
                raise CorpusError(f"{iid}: missing field {key!r}")
        x = Table.from_cells(obj["table"], type_inventory, where=f"{iid}/table")
        tp = obj.get("table_prime")
        x_prime = None if tp is None else Table.from_cells(tp, type_inventory, where=f"{iid}/table_prime")
        aux = obj.get("aux")
        ref = tokenize(obj["reference"])
        if not ref:
            raise CorpusError(f"{iid}: empty reference")
        return cls(iid, x, ref, x_prime, None if aux is None else tokenize(aux))


def write_corpus(path, instances: Iterable[Instance]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_json(), sort_keys=True) + "\n")


def corpus_file(path, split: str | None = None) -> Path:
    path = Path(path)
    if path.is_dir():
        if split is None:
            raise CorpusError(f"{path} is a directory; a split name is required")
        return path / f"{split}.jsonl"
    return path


def parse_corpus(path, split: str | None = None, type_inventory=KNOWN_TYPES) -> list[Instance]:
    """Load and validate a JSON Lines corpus (``path`` may be a directory holding ``<split>.jsonl``)."""
    f = corpus_file(path, split)
    if not f.exists():
        raise CorpusError(f"corpus file {f} does not exist")
    out = []
    with f.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{f}:{lineno}: invalid JSON ({e.msg})") from None
            out.append(Instance.from_json(obj, type_inventory))
    if not out:
        raise CorpusError(f"corpus file {f} contains no instances")
    stats = corpus_stats(out)
    log.info("%s: %d instances, avg ref length %.2f, %d data types", f, stats["instances"],
             stats["avg_ref_length"], stats["data_types"])
    return out


def corpus_stats(instances: Sequence[Instance], extractor=None) -> dict:
    """Corpus size and length statistics.

    ``avg_output_records`` counts records an extractor finds in ``y_aux``;
    it is only reported when ``extractor(tokens, table)`` is supplied.
    """
    n = len(instances)
    types = set()
    for inst in instances:
        types.update(inst.x.types)
    stats = {
        "instances": n,
        "avg_ref_length": sum(len(i.y_prime) for i in instances) / n if n else 0.0,
        "data_types": len(types),
        "avg_input_records": sum(i.x.size for i in instances) / n if n else 0.0,
    }
    if extractor is not None:
        with_aux = [i for i in instances if i.y_aux is not None]
        stats["avg_output_records"] = (
            sum(len(extractor(i.y_aux, i.x)) for i in with_aux) / len(with_aux) if with_aux else 0.0
        )
    return stats


def record_tokens(r: Record) -> tuple[str, str, str, str]:
    """Vocabulary tokens for the (entity, type, value, feature) embedding slots."""
    return (entity_key(r.entity), r.rtype, r.value.lower(), FEATURE_TOKENS[r.feature])


@dataclass
class Vocab:
    itos: list[str]
    stoi: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        if tuple(self.itos[:4]) != SPECIALS:
            raise ValueError("vocab must start with the special tokens")
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocab")

    pad = 0
    bos = 1
    eos = 2
    unk = 3

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def index(self, tok: str) -> int:
        return self.stoi.get(tok, UNK_ID)

    def encode(self, toks: Iterable[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in toks]

    def decode(self, ids: Iterable[int], strip: bool = True) -> list[str]:
        out = []
        for i in ids:
            if strip and i == EOS_ID:
                break
            if strip and i in (PAD_ID, BOS_ID):
                continue
            out.append(self.itos[i])
        return out


PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3


def build_vocab(corpus: Sequence[Instance], min_freq: int = 1) -> Vocab:
    """Vocabulary over summary tokens and record tokens with count >= ``min_freq``.

    Special and feature tokens are always kept.  Order is by descending
    frequency, ties broken alphabetically.
    """
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for inst in corpus:
        counts.update(inst.y_prime)
        if inst.y_aux:
            counts.update(inst.y_aux)
        for t in (inst.x, inst.x_prime):
            if t is None:
                continue
            for r in t.records:
                counts.update(entity_tokens(r.entity))
                counts.update(record_tokens(r))
    always = list(SPECIALS) + [FEATURE_TOKENS[f] for f in FEATURES]
    kept = sorted((t for t, c in counts.items() if c >= min_freq and t not in always), key=lambda t: (-counts[t], t))
    return Vocab(always + kept)
