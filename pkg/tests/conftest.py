import json
from pathlib import Path

from docmanip.data import Table, tokenize

FIXTURES = Path(__file__).parent / "fixtures"


def load_metric_cases():
    raw = json.loads((FIXTURES / "metric_cases.json").read_text())
    tables = {k: Table.from_cells(v) for k, v in raw["tables"].items()}
    return tables, raw["cases"]


def run_metric_case(case, tables):
    """Return (got, expected) for one fixture; set counts are compared exactly by the caller."""
    from docmanip.metrics import bleu, content_fidelity, content_selection

    if case["metric"] == "bleu":
        got = bleu([tokenize(c) for c in case["candidates"]], [tokenize(r) for r in case["references"]])
        return [got], [case["expected"]]
    table = tables[case["table"]]
    if case["metric"] == "cf":
        return list(content_fidelity(tokenize(case["output"]), table)), case["expected"]
    got = content_selection(tokenize(case["output"]), tokenize(case["aux"]), table)
    return list(got), case["expected"]
