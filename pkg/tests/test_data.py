import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docmanip.data import (
    PAD_ID,
    SPECIALS,
    UNK_ID,
    CorpusError,
    Instance,
    Table,
    build_vocab,
    corpus_stats,
    entity_tokens,
    linearize_table,
    parse_corpus,
    position_to_cell,
    record_tokens,
    tokenize,
    write_corpus,
)
from docmanip.extraction import extract_records_from_text
from docmanip.synth import synth_corpus


def _cells(rows, types=("NAME", "PTS")):
    out = []
    for ent in rows:
        for t in types:
            out.append({"entity": ent, "type": t, "value": ent.split()[-1] if t == "NAME" else "10", "feature": "home"})
    return out


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("James scored 25 points, a season-high.") == [
        "james", "scored", "25", "points", ",", "a", "season-high", "."
    ]


def test_table_shape_and_lookup():
    t = Table.from_cells(_cells(["Ann Lee", "Bo Kim", "Cy Fox"], ("NAME", "PTS", "REB", "AST")))
    assert (t.n_rows, t.n_cols, t.size) == (3, 4, 12)
    assert t.types == ["NAME", "PTS", "REB", "AST"]
    assert t.lookup("Bo Kim", "REB").row == 1
    assert t.lookup("Nobody", "PTS") is None


def test_linearize_positions():
    t = Table.from_cells(_cells(["Ann Lee", "Bo Kim"]))
    assert [(r.row, r.col) for _, r in linearize_table(t)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert [o for o, _ in linearize_table(t)] == [0, 1, 2, 3]


def test_position_inverse():
    t = Table.from_cells(_cells(["Ann Lee", "Bo Kim"], ("NAME", "PTS", "REB", "AST")))
    pos = {(r.row, r.col): o for o, r in linearize_table(t)}
    assert pos[(1, 2)] == 6
    assert position_to_cell(6, 4) == (1, 2)


@pytest.mark.parametrize(
    "cells, message",
    [
        ([{"entity": "A", "type": "PTS", "value": "1"}], "missing field 'feature'"),
        ([{"entity": "A", "type": "XYZ", "value": "1", "feature": "home"}], "unknown type"),
        ([{"entity": "A", "type": "PTS", "value": "1", "feature": "away"}], "feature"),
        (_cells(["A"], ("PTS",)) + _cells(["B"], ("REB",)), "different column type"),
        (_cells(["A"]) + _cells(["B"]) + _cells(["A"]), "not contiguous"),
        ([], "empty table"),
    ],
)
def test_malformed_tables_rejected(cells, message):
    with pytest.raises(CorpusError, match=message):
        Table.from_cells(cells, where="inst-7")


def test_error_names_instance(tmp_path):
    bad = {"id": "g-42", "table": [{"entity": "A", "type": "NOPE", "value": "1", "feature": "home"}], "reference": "a"}
    f = tmp_path / "train.jsonl"
    f.write_text(json.dumps(bad) + "\n")
    with pytest.raises(CorpusError, match="g-42"):
        parse_corpus(tmp_path, "train")


def test_empty_file_is_an_error(tmp_path):
    (tmp_path / "train.jsonl").write_text("")
    with pytest.raises(CorpusError, match="no instances"):
        parse_corpus(tmp_path, "train")


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(CorpusError, match="does not exist"):
        parse_corpus(tmp_path / "nope.jsonl")


def test_round_trip(tmp_path):
    insts = synth_corpus(3, 5, 3, 4)
    write_corpus(tmp_path / "c.jsonl", insts)
    back = parse_corpus(tmp_path / "c.jsonl")
    assert back == insts


def test_loader_stats_match_generator():
    insts = synth_corpus(7, 8, 3, 4)
    stats = corpus_stats(insts)
    assert stats["instances"] == 8
    assert stats["data_types"] == 4
    assert stats["avg_input_records"] == 12


def test_vocab_specials_and_bijection():
    v = build_vocab(synth_corpus(1, 6, 3, 4))
    assert tuple(v.itos[:4]) == SPECIALS
    assert v.index("<pad>") == PAD_ID
    assert all(v.index(t) == i for i, t in enumerate(v.itos))
    assert v.index("zzz-never-seen") == UNK_ID


def test_vocab_min_freq_matches_brute_force():
    corpus = synth_corpus(2, 10, 3, 4)
    tally = Counter()
    for inst in corpus:
        tally.update(inst.y_prime)
        tally.update(inst.y_aux)
        for t in (inst.x, inst.x_prime):
            for r in t.records:
                tally.update(entity_tokens(r.entity))
                tally.update(record_tokens(r))
    v = build_vocab(corpus, min_freq=2)
    kept = {t for t in v.itos if t not in SPECIALS and t not in ("<home>", "<vis>")}
    assert kept == {t for t, c in tally.items() if c >= 2 and t not in ("<home>", "<vis>")}
    assert any(c == 1 for c in tally.values())


def test_instance_json_optional_fields():
    inst = synth_corpus(0, 1, 2, 3)[0]
    bare = Instance(inst.id, inst.x, inst.y_prime)
    assert Instance.from_json(bare.to_json()) == bare


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 6))
@settings(max_examples=25, deadline=None)
def test_summaries_describe_their_tables(seed, rows, types):
    for inst in synth_corpus(seed, 2, rows, types):
        assert extract_records_from_text(inst.y_aux, inst.x)
        assert extract_records_from_text(inst.y_prime, inst.x_prime)
