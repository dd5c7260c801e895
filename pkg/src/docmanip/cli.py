"""Command line entry point: ``docmanip <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baseline import rule_sf
from .data import CorpusError, Instance, corpus_stats, parse_corpus, write_corpus
from .extraction import build_dataset, extract_records_from_text
from .metrics import evaluate
from .model import beam_search
from .synth import synth_corpus, write_splits
from .training import ConfigError, TrainConfig, load_config, load_model, micro_grad_check, train

log = logging.getLogger("docmanip")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_generations(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def _read_generations(path) -> dict[str, list[str]]:
    out = {}
    with Path(path).open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if line.strip():
                try:
                    row = json.loads(line)
                    out[row["id"]] = list(row["tokens"])
                except (json.JSONDecodeError, KeyError) as e:
                    raise CorpusError(f"{path}:{lineno}: bad generation line ({e})") from None
    if not out:
        raise CorpusError(f"{path}: no generations")
    return out


def cmd_synth_data(a) -> int:
    insts = synth_corpus(a.seed, a.n, a.rows, a.types)
    sizes = write_splits(a.out, insts)
    print(json.dumps(sizes, sort_keys=True))
    return 0


def cmd_stats(a) -> int:
    insts = parse_corpus(a.data, a.split)
    print(json.dumps(corpus_stats(insts, extract_records_from_text), indent=2, sort_keys=True))
    return 0


def cmd_build_dataset(a) -> int:
    """Retrieve references for every split; held-out splits retrieve from train."""
    train_set = parse_corpus(a.data, "train")
    out = Path(a.out)
    built = build_dataset(train_set)
    write_corpus(out / "train.jsonl", built)
    sizes = {"train": len(built)}
    for split in ("dev", "test"):
        try:
            items = parse_corpus(a.data, split)
        except CorpusError as e:
            log.warning("skipping %s: %s", split, e)
            continue
        write_corpus(out / f"{split}.jsonl", build_dataset(items, pool=train_set))
        sizes[split] = len(items)
    print(json.dumps(sizes, sort_keys=True))
    return 0


def _train_config(a) -> TrainConfig:
    cfg = load_config(a.config) if a.config else TrainConfig()
    raw = cfg.to_dict()
    if a.seed is not None:
        raw["seed"] = a.seed
    if a.no_inter_att:
        raw["no_inter_att"] = True
    if a.no_back_trans:
        raw["no_back_trans"] = True
    if a.max_steps is not None:
        raw["max_steps"] = a.max_steps
    return TrainConfig.from_dict(raw)


def cmd_train(a) -> int:
    cfg = _train_config(a)
    train_set = parse_corpus(a.data, "train")
    try:
        dev_set = parse_corpus(a.data, "dev")
    except CorpusError:
        dev_set = None
    result = train(train_set, cfg, dev_set, out_dir=a.out)
    print(json.dumps({"steps": len(result.log), "checkpoint": str(Path(a.out) / "model.npz")}))
    return 0


def _gen_row(inst: Instance, tokens: list[str], score=None, trace=None) -> dict:
    row = {"id": inst.id, "tokens": tokens, "text": " ".join(tokens)}
    if score is not None:
        row["score"] = round(score, 10)
    if trace is not None:
        row["trace"] = trace
    return row


def cmd_generate(a) -> int:
    model = load_model(a.checkpoint)
    insts = parse_corpus(a.data, a.split)
    rows = []
    for inst in insts:
        res = beam_search(model, inst.x, inst.y_prime, a.beam, a.min_len, a.max_len)
        rows.append(_gen_row(inst, res.tokens, res.score, res.trace if a.trace else None))
    out = Path(a.out) / "generations.jsonl"
    _write_generations(out, rows)
    print(json.dumps({"generations": str(out), "n": len(rows)}))
    return 0


def cmd_evaluate(a) -> int:
    gens = _read_generations(a.generations)
    insts = [i for i in parse_corpus(a.data, a.split) if i.id in gens]
    missing = set(gens) - {i.id for i in insts}
    if missing:
        raise CorpusError(f"generations for unknown ids: {sorted(missing)[:5]}")
    report = evaluate(
        [gens[i.id] for i in insts],
        [i.x for i in insts],
        [i.y_prime for i in insts],
        [i.x_prime for i in insts] if all(i.x_prime is not None for i in insts) else None,
        [i.y_aux for i in insts] if all(i.y_aux is not None for i in insts) else None,
        mask=a.mask_records,
    )
    if a.out:
        _write_json(Path(a.out) / "report.json", report.to_dict())
    print(json.dumps(report.to_dict(), sort_keys=True))
    print(report.format_table())
    return 0


def cmd_baseline(a) -> int:
    insts = parse_corpus(a.data, a.split)
    if any(i.x_prime is None for i in insts):
        raise CorpusError("rule-sf needs the reference tables x'")
    rows = [_gen_row(i, rule_sf(i.x, i.y_prime, i.x_prime)) for i in insts]
    out = Path(a.out) / "generations.jsonl"
    _write_generations(out, rows)
    print(json.dumps({"generations": str(out), "n": len(rows)}))
    return 0


def cmd_gradcheck(a) -> int:
    err = micro_grad_check(inter_att=not a.no_inter_att, seed=a.seed or 0)
    ok = err < a.tol
    print(json.dumps({"max_relative_error": err, "tolerance": a.tol, "ok": ok}))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="docmanip", description="Document-scale text content manipulation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth-data", help="write a synthetic corpus split into train/dev/test")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--rows", type=int, default=3)
    s.add_argument("--types", type=int, default=4)
    s.set_defaults(fn=cmd_synth_data)

    s = sub.add_parser("stats", help="corpus statistics")
    s.add_argument("--data", required=True)
    s.add_argument("--split", default=None)
    s.set_defaults(fn=cmd_stats)

    s = sub.add_parser("build-dataset", help="attach retrieved references (y', x') to every instance")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_build_dataset)

    s = sub.add_parser("train", help="run the staged training schedule")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--no-inter-att", action="store_true")
    s.add_argument("--no-back-trans", action="store_true")
    s.add_argument("--max-steps", type=int)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("generate", help="beam-search generation")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int, default=5)
    s.add_argument("--min-len", type=int, default=150)
    s.add_argument("--max-len", type=int, default=850)
    s.add_argument("--trace", action="store_true", help="include per-step copy/attention traces")
    s.set_defaults(fn=cmd_generate)

    s = sub.add_parser("evaluate", help="content fidelity, content selection and style BLEU")
    s.add_argument("--generations", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test")
    s.add_argument("--out")
    s.add_argument("--mask-records", action="store_true")
    s.set_defaults(fn=cmd_evaluate)

    s = sub.add_parser("baseline", help="non-neural baselines")
    bsub = s.add_subparsers(dest="baseline", required=True)
    b = bsub.add_parser("rule-sf", help="rule-based slot filling")
    b.add_argument("--data", required=True)
    b.add_argument("--split", default="test")
    b.add_argument("--out", required=True)
    b.set_defaults(fn=cmd_baseline)

    s = sub.add_parser("gradcheck", help="finite-difference check of the joint loss on a micro instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-inter-att", action="store_true")
    s.add_argument("--tol", type=float, default=1e-3)
    s.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.fn(a)
    except (CorpusError, ConfigError, ValueError, OSError) as e:
        print(f"docmanip: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
