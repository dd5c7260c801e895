"""Convert ROTOWIRE game files (train.json etc.) into docmanip JSON Lines.

Usage::

    python scripts/convert_rotowire.py rotowire/train.json data/raw/train.jsonl

Each game becomes one instance.  The table holds the player box score
(one row per player who has minutes, every column of ``ROTOWIRE_TYPES``);
``reference`` and ``aux`` both hold the game summary.  Run
``docmanip build-dataset`` afterwards to attach retrieved references.
"""
from __future__ import annotations

import argparse
import json
import sys

from docmanip.data import ROTOWIRE_TYPES, Instance, Table, detokenize, tokenize, write_corpus


def game_cells(game: dict) -> list[dict]:
    box = game["box_score"]
    cells = []
    for key in sorted(box["PLAYER_NAME"], key=int):
        if box["MIN"].get(key, "N/A") == "N/A":
            continue
        feature = "home" if box["TEAM_CITY"][key] == game["home_city"] else "visiting"
        name = box["PLAYER_NAME"][key]
        for col in ROTOWIRE_TYPES:
            cells.append({"entity": name, "type": col, "value": str(box[col].get(key, "N/A")), "feature": feature})
    return cells


def convert(games: list[dict], prefix: str) -> list[Instance]:
    out = []
    for k, game in enumerate(games):
        summary = tokenize(detokenize(game["summary"]))
        table = Table.from_cells(game_cells(game), where=f"{prefix}-{k}")
        out.append(Instance(f"{prefix}-{k}", table, summary, None, summary))
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--prefix", default="rw")
    a = p.parse_args(argv)
    with open(a.source, encoding="utf-8") as f:
        games = json.load(f)
    insts = convert(games, a.prefix)
    write_corpus(a.target, insts)
    print(json.dumps({"instances": len(insts)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
