import math

import pytest
from conftest import load_metric_cases, run_metric_case
from hypothesis import given, settings
from hypothesis import strategies as st

from docmanip.data import tokenize
from docmanip.extraction import ExtractedRecord, extract_records_from_text
from docmanip.metrics import MASK, bleu, content_fidelity, evaluate, mask_records

TABLES, CASES = load_metric_cases()


@pytest.mark.parametrize("case", CASES, ids=[c["name"] for c in CASES])
def test_hand_computed_case(case):
    got, expected = run_metric_case(case, TABLES)
    assert len(got) == len(expected)
    for g, e in zip(got, expected):
        if isinstance(e, int) and not isinstance(e, bool):
            assert g == e
        else:
            assert math.isclose(g, e, abs_tol=1e-6)


@pytest.mark.parametrize("case", [c for c in CASES if "expected_records" in c], ids=lambda c: c["name"])
def test_fixture_extracted_sets(case):
    got = extract_records_from_text(tokenize(case["output"]), TABLES[case["table"]])
    assert got == {ExtractedRecord(*r) for r in case["expected_records"]}


@pytest.mark.parametrize("case", [c for c in CASES if "expected_sets" in c], ids=lambda c: c["name"])
def test_fixture_set_counts(case):
    t = TABLES[case["table"]]
    ez = extract_records_from_text(tokenize(case["output"]), t)
    ea = extract_records_from_text(tokenize(case["aux"]), t)
    assert {"hit": len(ez & ea), "pred": len(ez), "gold": len(ea)} == case["expected_sets"]


def test_fixture_count():
    assert len(CASES) == 10


def test_bleu_input_errors():
    with pytest.raises(ValueError):
        bleu([], [])
    with pytest.raises(ValueError):
        bleu([["a"]], [["a"], ["b"]])


def test_bleu_max_n_one_clips_counts():
    # 'a' x3 against 'a' x2: clipped 2/3, equal lengths
    assert math.isclose(bleu([["a", "a", "a"]], [["a", "b", "a"]], max_n=1), 200 / 3)


def test_cf_empty_output():
    assert content_fidelity([], TABLES["lee"]) == (0.0, 0)


def test_evaluate_pools_counts():
    t = TABLES["three"]
    outs = [tokenize("ames had 10 points ."), tokenize("ames had 99 points . burr had 5 rebounds .")]
    aux = [tokenize("ames had 10 points ."), tokenize("cole had 3 assists .")]
    rep = evaluate(outs, [t, t], aux, aux=aux)
    # CF: 2 correct of 3 extracted; CF# = 2 correct / 2 outputs
    assert math.isclose(rep.cf_precision, 200 / 3) and rep.cf_count == 1.0
    # CS: hit 1, pred 3, gold 2
    assert math.isclose(rep.cs_precision, 100 / 3) and rep.cs_recall == 50.0
    assert math.isclose(rep.cs_f1, 40.0)


def test_evaluate_without_aux_reports_zero_cs():
    t = TABLES["lee"]
    rep = evaluate([["lee"]], [t], [["lee"]])
    assert (rep.cs_precision, rep.cs_recall, rep.cs_f1) == (0.0, 0.0, 0.0)


def test_masking_hides_values_and_names():
    # "30 minutes" is extracted too although the table has no MIN column
    got = mask_records(tokenize("ann lee scored 10 points in 30 minutes , after a 5 game run ."), TABLES["lee"])
    assert got == [MASK, MASK, "scored", MASK, "points", "in", MASK, "minutes", ",", "after", "a", "5", "game", "run", "."]


def test_masked_evaluate_needs_reference_tables():
    with pytest.raises(ValueError):
        evaluate([["a"]], [TABLES["lee"]], [["a"]], mask=True)


def test_report_table_has_all_columns():
    rep = evaluate([["a"]], [TABLES["lee"]], [["a"]])
    head = rep.format_table().splitlines()[0].split()
    assert head == ["CF%", "CF#", "CS-P%", "CS-R%", "CS-F%", "BLEU"]


_words = st.lists(st.sampled_from(list("abcdef")), min_size=0, max_size=12)


@given(st.lists(st.tuples(_words, _words), min_size=1, max_size=4))
@settings(max_examples=100, deadline=None)
def test_bleu_range(pairs):
    score = bleu([c for c, _ in pairs], [r for _, r in pairs])
    assert 0.0 <= score <= 100.0 + 1e-9


@given(st.lists(st.lists(st.sampled_from(list("abcdef")), min_size=4, max_size=12), min_size=1, max_size=4))
@settings(max_examples=50, deadline=None)
def test_bleu_self_is_100(texts):
    assert math.isclose(bleu(texts, texts), 100.0)


@given(st.lists(st.sampled_from(["10", "5", "7", "points", "rebounds", "lee", "ann", "."]), max_size=15))
@settings(max_examples=100, deadline=None)
def test_cf_bounds(tokens):
    p, n = content_fidelity(tokens, TABLES["lee"])
    assert 0.0 <= p <= 100.0 and 0 <= n <= len(TABLES["lee"].triples())
