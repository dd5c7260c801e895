"""Objectives, the three-stage schedule and the training loop.

Losses are mean per-token negative log-likelihoods (minimised):

* record:   -log p(y_aux | x, y')
* style:    -log p(y' | x', y')
* backtrans: -log p(y' | x', z) with z = greedy decode of (x, y'), held constant

joint = l1 * record + l2 * style + (1 - l1 - l2) * backtrans
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .autodiff import (
    AdamState,
    Tensor,
    adam_step,
    clip_grad_norm,
    grad_check,
    load_checkpoint,
    no_grad,
    ops,
    save_checkpoint,
)
from .data import Instance, Table, Vocab, build_vocab
from .model import Model, ModelConfig

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = ((0.0, 1.0), (0.5, 0.5), (0.4, 0.5))
LOG_FIELDS = ("step", "epoch", "stage", "loss_record", "loss_style", "loss_backtrans", "loss_total", "lr", "grad_norm")


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


def _check_lambdas(l1: float, l2: float) -> None:
    if l1 < 0 or l2 < 0 or l1 + l2 > 1 + 1e-12:
        raise ConfigError(f"need l1, l2 >= 0 and l1 + l2 <= 1, got {l1}, {l2}")


@dataclass
class TrainConfig:
    d: int = 16
    dropout: float = 0.3
    lr: float = 1e-3
    lr_decay: float = 0.97
    batch_size: int = 4
    stage_epochs: tuple[int, int, int] = (10, 10, 10)
    stage_lambdas: tuple[tuple[float, float], ...] = DEFAULT_LAMBDAS
    clip_norm: float = 5.0
    seed: int = 0
    no_inter_att: bool = False
    no_back_trans: bool = False
    bt_max_len: int = 100
    bt_min_len: int = 1
    patience: int = 0
    max_steps: int | None = None
    min_freq: int = 1
    beam: int = 5
    min_len: int = 150
    max_len: int = 850

    def __post_init__(self) -> None:
        self.stage_epochs = tuple(int(e) for e in self.stage_epochs)
        self.stage_lambdas = tuple((float(a), float(b)) for a, b in self.stage_lambdas)
        if len(self.stage_epochs) != len(self.stage_lambdas):
            raise ConfigError("stage_epochs and stage_lambdas must have the same length")
        for l1, l2 in self.stage_lambdas:
            _check_lambdas(l1, l2)
        if not 0 <= self.dropout < 1:
            raise ConfigError("dropout must be in [0, 1)")
        if self.batch_size < 1 or self.d < 1:
            raise ConfigError("batch_size and d must be positive")

    def effective_lambdas(self, stage: int) -> tuple[float, float, float]:
        """(record, style, backtrans) weights; without back-translation the
        first two are renormalised to sum to one."""
        l1, l2 = self.stage_lambdas[stage]
        if self.no_back_trans and l1 + l2 > 0:
            s = l1 + l2
            return l1 / s, l2 / s, 0.0
        return l1, l2, max(0.0, 1.0 - l1 - l2)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["stage_epochs"] = list(self.stage_epochs)
        out["stage_lambdas"] = [list(p) for p in self.stage_lambdas]
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def load_config(path) -> TrainConfig:
    """Read a YAML mapping of TrainConfig field names to values."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    return TrainConfig.from_dict(raw)


# --- objectives ------------------------------------------------------------

def nll_loss(model: Model, tables: Sequence[Table], references, targets) -> Tensor:
    """Mean per-token NLL of ``targets`` given (table, reference) under teacher forcing."""
    if any(len(t) == 0 for t in targets):
        raise ValueError("nll_loss needs non-empty targets")
    return model.nll(model.batch(tables, references, targets))


def back_translation_loss(
    model: Model,
    x_prime: Sequence[Table | None],
    y_prime,
    x: Sequence[Table],
    max_len: int = 100,
    min_len: int = 1,
    z=None,
) -> Tensor | None:
    """NLL of y' given (x', z) where z is decoded greedily from (x, y').

    ``z`` may be supplied directly.  Instances whose z is empty are skipped;
    returns None when nothing is left.
    """
    if any(t is None for t in x_prime):
        raise ConfigError("back-translation needs the reference tables x'")
    if z is None:
        z = model.greedy(x, y_prime, max_len, min_len)
    keep = [k for k, seq in enumerate(z) if len(seq) > 0]
    if len(keep) < len(z):
        log.warning("back-translation: %d empty pseudo references skipped", len(z) - len(keep))
    if not keep:
        return None
    return nll_loss(model, [x_prime[k] for k in keep], [z[k] for k in keep], [y_prime[k] for k in keep])


def joint_objective(losses: dict[str, Tensor | None], l1: float, l2: float, l3: float | None = None) -> Tensor:
    """l1 * record + l2 * style + (1 - l1 - l2) * backtrans.

    Terms with zero weight may be absent.  ``l3`` overrides the residual
    weight (used when back-translation is ablated).
    """
    _check_lambdas(l1, l2)
    l3 = 1.0 - l1 - l2 if l3 is None else l3
    total: Tensor | None = None
    for name, w in (("record", l1), ("style", l2), ("backtrans", l3)):
        if w == 0:
            continue
        term = losses.get(name)
        if term is None:
            if name == "backtrans":
                continue
            raise ValueError(f"missing {name} loss with weight {w}")
        part = ops.mul(term, w)
        total = part if total is None else ops.add(total, part)
    return total if total is not None else Tensor(np.zeros(()))


# --- loop ------------------------------------------------------------------

@dataclass
class TrainResult:
    model: Model
    log: list[dict] = field(default_factory=list)
    snapshots: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    adam: AdamState | None = None


def model_config(cfg: TrainConfig, vocab: Vocab) -> ModelConfig:
    return ModelConfig(vocab_size=len(vocab), d=cfg.d, dropout=cfg.dropout, inter_att=not cfg.no_inter_att)


def save_model(path, model: Model, extra: dict | None = None) -> None:
    meta: dict[str, Any] = {"model_config": model.cfg.to_dict(), "vocab": model.vocab.itos}
    meta.update(extra or {})
    save_checkpoint(path, model.params, meta)


def load_model(path, seed: int = 0) -> Model:
    arrays, meta = load_checkpoint(path)
    cfg = ModelConfig(**meta["model_config"])
    vocab = Vocab(list(meta["vocab"]))
    params = {k: Tensor(v.copy(), requires_grad=True) for k, v in arrays.items()}
    return Model(cfg, vocab, np.random.default_rng(seed), params)


def snapshot(model: Model) -> dict[str, np.ndarray]:
    return {k: p.data.copy() for k, p in model.params.items()}


def restore(model: Model, snap: dict[str, np.ndarray]) -> None:
    for k, v in snap.items():
        model.params[k].data = v.copy()


def _batches(items: Sequence[Instance], size: int, rng: np.random.Generator):
    order = rng.permutation(len(items))
    for s in range(0, len(order), size):
        yield [items[i] for i in order[s : s + size]]


def step_losses(model: Model, batch: Sequence[Instance], weights, cfg: TrainConfig, z=None) -> dict[str, Tensor | None]:
    """Loss terms with non-zero weight; ``z`` optionally fixes the pseudo references."""
    l1, l2, l3 = weights
    xs = [i.x for i in batch]
    refs = [i.y_prime for i in batch]
    out: dict[str, Tensor | None] = {}
    if l1 > 0:
        if any(i.y_aux is None for i in batch):
            raise ConfigError("record loss needs y_aux")
        out["record"] = nll_loss(model, xs, refs, [i.y_aux for i in batch])
    if l2 > 0 or l3 > 0:
        if any(i.x_prime is None for i in batch):
            raise ConfigError("style and back-translation losses need x'")
    if l2 > 0:
        out["style"] = nll_loss(model, [i.x_prime for i in batch], refs, refs)
    if l3 > 0:
        out["backtrans"] = back_translation_loss(
            model, [i.x_prime for i in batch], refs, xs, cfg.bt_max_len, cfg.bt_min_len, z
        )
    return out


def dev_loss(model: Model, items: Sequence[Instance], weights, cfg: TrainConfig) -> float:
    total, n = 0.0, 0
    with no_grad(), model.eval_mode():
        for s in range(0, len(items), cfg.batch_size):
            chunk = list(items[s : s + cfg.batch_size])
            total += float(joint_objective(step_losses(model, chunk, weights, cfg), *weights).data) * len(chunk)
            n += len(chunk)
    return total / max(n, 1)


def train(
    train_set: Sequence[Instance],
    cfg: TrainConfig,
    dev_set: Sequence[Instance] | None = None,
    vocab: Vocab | None = None,
    out_dir=None,
    model: Model | None = None,
) -> TrainResult:
    """Run every stage of the schedule; checkpoints go to ``out_dir`` each epoch."""
    if not train_set:
        raise ValueError("empty training set")
    init_seq, drop_seq, shuf_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    if model is None:
        vocab = vocab or build_vocab(list(train_set) + list(dev_set or []), cfg.min_freq)
        model = Model(model_config(cfg, vocab), vocab, np.random.default_rng(init_seq))
    model.rng = np.random.default_rng(drop_seq)
    shuffle_rng = np.random.default_rng(shuf_seq)
    adam = AdamState(lr=cfg.lr, lr_decay=cfg.lr_decay)
    result = TrainResult(model, adam=adam)
    out = None if out_dir is None else Path(out_dir)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    step = 0
    epoch = 0
    for stage, n_epochs in enumerate(cfg.stage_epochs):
        weights = cfg.effective_lambdas(stage)
        best_dev, stale = np.inf, 0
        for _ in range(n_epochs):
            if cfg.max_steps is not None and step >= cfg.max_steps:
                break
            epoch += 1
            model.training = True
            for batch in _batches(train_set, cfg.batch_size, shuffle_rng):
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    break
                where = f"step {step + 1} (stage {stage + 1}, epoch {epoch}), batch ids {[i.id for i in batch]}"
                try:
                    losses = step_losses(model, batch, weights, cfg)
                except FloatingPointError as e:
                    raise TrainingError(f"non-finite values at {where}: {e}") from e
                total = joint_objective(losses, weights[0], weights[1], weights[2])
                value = float(total.data)
                if not np.isfinite(value):
                    terms = ", ".join(f"{k}={None if v is None else float(v.data)}" for k, v in losses.items())
                    raise TrainingError(f"non-finite loss at {where}: {terms}")
                for p in model.params.values():
                    p.grad = None
                if total.requires_grad:
                    total.backward()
                grads = {k: p.grad for k, p in model.params.items() if p.grad is not None}
                norm = clip_grad_norm(grads, cfg.clip_norm)
                if grads:
                    adam_step(model.params, grads, adam)
                step += 1
                row = {"step": step, "epoch": epoch, "stage": stage + 1, "lr": adam.lr, "grad_norm": norm,
                       "loss_total": value}
                for name in ("record", "style", "backtrans"):
                    t = losses.get(name)
                    row[f"loss_{name}"] = "" if t is None else float(t.data)
                result.log.append(row)
            model.training = False
            adam.decay()
            if out is not None:
                save_model(out / f"epoch{epoch:03d}.npz", model, {"epoch": epoch, "stage": stage + 1,
                                                                  "train_config": cfg.to_dict()})
            if dev_set and cfg.patience > 0:
                dl = dev_loss(model, dev_set, weights, cfg)
                log.info("stage %d epoch %d dev loss %.4f", stage + 1, epoch, dl)
                if dl < best_dev - 1e-9:
                    best_dev, stale = dl, 0
                else:
                    stale += 1
                    if stale >= cfg.patience:
                        log.info("stage %d early stop after epoch %d", stage + 1, epoch)
                        break
        result.snapshots[f"stage{stage + 1}"] = snapshot(model)
        if out is not None:
            save_model(out / f"stage{stage + 1}.npz", model, {"epoch": epoch, "stage": stage + 1,
                                                              "train_config": cfg.to_dict()})
    if out is not None:
        save_model(out / "model.npz", model, {"epoch": epoch, "train_config": cfg.to_dict()})
        write_log(out / "train_log.csv", result.log)
    return result


def write_log(path, rows: Sequence[dict]) -> None:
    with Path(path).open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=LOG_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in LOG_FIELDS})


def micro_instance() -> Instance:
    """A one-row, two-record table pair with three-token texts."""

    def table(entity: str, pts: str) -> Table:
        last = entity.split()[-1].lower()
        return Table.from_cells([
            {"entity": entity, "type": "NAME", "value": last, "feature": "home"},
            {"entity": entity, "type": "PTS", "value": pts, "feature": "home"},
        ])

    return Instance("micro", table("Ann Lee", "12"), ["kim", "9", "points"], table("Bo Kim", "9"), ["lee", "12", "points"])


def micro_grad_check(
    inter_att: bool = True, seed: int = 0, d: int = 4, scale: float = 0.5, epsilon: float = 1e-4, order: int = 2
) -> float:
    """Max relative gradient error of the stage-3 joint loss on :func:`micro_instance`.

    Float64, dropout off.  Parameters are redrawn with std ``scale`` so that
    gradients stand clear of finite-difference rounding noise; z is decoded
    once and held fixed, as the loss itself treats it.
    """
    inst = micro_instance()
    vocab = build_vocab([inst])
    rng = np.random.default_rng(seed)
    model = Model(ModelConfig(len(vocab), d, 0.0, inter_att), vocab, rng)
    for p in model.params.values():
        p.data = rng.normal(0.0, scale, p.data.shape)
    cfg = TrainConfig(d=d, dropout=0.0, bt_max_len=3, bt_min_len=1)
    weights = cfg.effective_lambdas(2)
    z = model.greedy([inst.x], [inst.y_prime], cfg.bt_max_len, cfg.bt_min_len)

    def loss():
        return joint_objective(step_losses(model, [inst], weights, cfg, z), *weights)

    return grad_check(loss, model.params, epsilon=epsilon, order=order)
