import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docmanip.data import Instance, Table, write_corpus
from docmanip.extraction import (
    ExtractedRecord,
    build_dataset,
    extract_mentions,
    extract_records_from_text,
    retrieve_reference,
)
from docmanip.synth import NOTABLE_POINTS, sample_table, select_rows, synth_corpus, write_splits


def _table(rows):
    """rows: (entity, {type: value}) pairs sharing one type order."""
    cells = []
    for ent, stats in rows:
        for t, v in stats.items():
            cells.append({"entity": ent, "type": t, "value": v, "feature": "home"})
    return Table.from_cells(cells)


# --- synthetic corpus ------------------------------------------------------

def test_same_seed_same_bytes(tmp_path):
    write_splits(tmp_path / "a", synth_corpus(11, 20, 3, 4))
    write_splits(tmp_path / "b", synth_corpus(11, 20, 3, 4))
    for split in ("train", "dev", "test"):
        assert (tmp_path / "a" / f"{split}.jsonl").read_bytes() == (tmp_path / "b" / f"{split}.jsonl").read_bytes()


def test_different_seed_differs(tmp_path):
    write_corpus(tmp_path / "a.jsonl", synth_corpus(1, 5, 3, 4))
    write_corpus(tmp_path / "b.jsonl", synth_corpus(2, 5, 3, 4))
    assert (tmp_path / "a.jsonl").read_bytes() != (tmp_path / "b.jsonl").read_bytes()


def test_counts_seed7():
    insts = synth_corpus(7, 8, 3, 4)
    assert len(insts) == 8
    assert all(i.x.size == 12 and i.x_prime.size == 12 for i in insts)


@pytest.mark.parametrize("rows, types", [(0, 4), (3, 1), (3, 99)])
def test_invalid_sizes(rows, types):
    with pytest.raises(ValueError):
        synth_corpus(0, 1, rows, types)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_numbers_come_from_own_table(seed):
    for inst in synth_corpus(seed, 3, 4, 5):
        for text, table in ((inst.y_aux, inst.x), (inst.y_prime, inst.x_prime)):
            values = {r.value for r in table.records}
            assert all(t in values for t in text if t.isdigit())


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_extractor_recovers_every_rendered_record(seed, rows, types):
    # every number the generator writes is extracted, and matches the table
    for inst in synth_corpus(seed, 2, rows, types):
        mentions = extract_mentions(inst.y_aux, inst.x)
        numbers = [p for p, t in enumerate(inst.y_aux) if t.isdigit()]
        assert [m.pos for m in mentions] == numbers
        assert {m.record for m in mentions} <= inst.x.triples()


def test_select_rows_rule():
    rng = random.Random(5)
    for _ in range(50):
        t = sample_table(rng, 4, 3)
        pts = [int(t.cell(i, 1).value) for i in range(t.n_rows)]
        picked = select_rows(t)
        notable = [i for i, p in enumerate(pts) if p >= NOTABLE_POINTS]
        assert picked == (notable or [pts.index(max(pts))])


# --- extraction ------------------------------------------------------------

def test_extract_single_record():
    t = _table([("Lebron James", {"PTS": "25"})])
    assert extract_records_from_text("james scored 25 points".split(), t) == {ExtractedRecord("Lebron James", "PTS", "25")}


def test_extract_nothing():
    t = _table([("Lebron James", {"PTS": "25"})])
    assert extract_records_from_text("what a game it was .".split(), t) == set()
    assert extract_records_from_text([], t) == set()


def test_same_value_two_types():
    t = _table([("Lebron James", {"PTS": "25", "REB": "25"})])
    got = extract_records_from_text("james had 25 points and 25 rebounds".split(), t)
    assert got == {ExtractedRecord("Lebron James", "PTS", "25"), ExtractedRecord("Lebron James", "REB", "25")}


def test_nearest_preceding_entity_wins():
    t = _table([("Ann Lee", {"PTS": "10"}), ("Bo Kim", {"PTS": "12"})])
    got = extract_records_from_text("lee scored 10 points and kim scored 12 points".split(), t)
    assert got == {ExtractedRecord("Ann Lee", "PTS", "10"), ExtractedRecord("Bo Kim", "PTS", "12")}


def test_sentence_boundary_blocks_entity():
    t = _table([("Ann Lee", {"PTS": "10"})])
    assert extract_records_from_text("lee played . 10 points".split(), t) == set()


def test_window_limit():
    t = _table([("Ann Lee", {"PTS": "10"})])
    far = ["lee"] + ["x"] * 10 + ["10", "points"]
    assert extract_records_from_text(far, t) == set()
    assert extract_records_from_text(far, t, window=11) == {ExtractedRecord("Ann Lee", "PTS", "10")}


def test_wrong_value_is_still_extracted():
    t = _table([("Ann Lee", {"PTS": "10"})])
    assert extract_records_from_text("lee scored 99 points".split(), t) == {ExtractedRecord("Ann Lee", "PTS", "99")}


def test_extraction_idempotent():
    inst = synth_corpus(4, 1, 3, 4)[0]
    assert extract_records_from_text(inst.y_aux, inst.x) == extract_records_from_text(list(inst.y_aux), inst.x)


# --- retrieval -------------------------------------------------------------

_KEYWORDS = {"PTS": "points", "REB": "rebounds", "AST": "assists", "STL": "steals"}


def _inst(iid, types):
    stats = {t: str(10 + k) for k, t in enumerate(types)}
    table = _table([("Ann Lee", stats)])
    text = []
    for t, v in stats.items():
        text += ["lee", "had", v, _KEYWORDS[t], "."]
    return Instance(iid, table, text, None, text)


def test_retrieval_prefers_largest_type_overlap():
    target = _inst("t", ["PTS", "REB", "AST"])
    pool = [_inst("a", ["PTS", "REB"]), _inst("b", ["PTS", "REB", "AST"]), _inst("c", ["STL"])]
    assert retrieve_reference(target, pool).id == "b"


def test_retrieval_excludes_self():
    target = _inst("t", ["PTS"])
    with pytest.raises(ValueError, match="empty retrieval pool"):
        retrieve_reference(target, [target])


def test_retrieval_tie_breaks_by_smaller_id():
    target = _inst("t", ["PTS"])
    pool = [_inst("z", ["PTS"]), _inst("m", ["PTS"])]
    assert retrieve_reference(target, pool).id == "m"
    assert retrieve_reference(target, pool[::-1]).id == "m"


def test_retrieval_jaccard_breaks_overlap_ties():
    target = _inst("t", ["PTS", "REB"])
    pool = [_inst("a", ["PTS", "REB", "AST", "STL"]), _inst("b", ["PTS", "REB", "AST"])]
    assert retrieve_reference(target, pool).id == "b"


def test_build_dataset_pairs_neighbour():
    raw = synth_corpus(9, 12, 3, 4)
    built = build_dataset(raw)
    assert [i.id for i in built] == [i.id for i in raw]
    for old, new in zip(raw, built):
        assert new.x == old.x and new.y_aux == old.y_aux
        assert any(d.id != old.id and d.y_aux == new.y_prime and d.x == new.x_prime for d in raw)
