from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autodiff import LSTMWeights, Tensor, get_default_dtype

INIT_STD = 0.1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d: int = 16
    dropout: float = 0.3
    inter_att: bool = True

    @property
    def ctx_width(self) -> int:
        """Width of the decoder attention context."""
        return 2 * self.d if self.inter_att else 4 * self.d

    def to_dict(self) -> dict:
        return asdict(self)


def _gauss(rng, shape):
    return Tensor(rng.normal(0.0, INIT_STD, size=shape).astype(get_default_dtype()), requires_grad=True)


def _zeros(shape):
    return Tensor(np.zeros(shape, dtype=get_default_dtype()), requires_grad=True)


def _lstm(p, prefix, rng, d_in, d):
    p[f"{prefix}.wx"] = _gauss(rng, (d_in, 4 * d))
    p[f"{prefix}.wh"] = _gauss(rng, (d, 4 * d))
    p[f"{prefix}.b"] = _zeros((4 * d,))


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, Tensor]:
    """All trainable tensors: zero-mean Gaussian (std 0.1) weights, zero biases."""
    d, v = cfg.d, cfg.vocab_size
    p: dict[str, Tensor] = {"emb": _gauss(rng, (v, d))}
    for direction in ("f", "b"):
        _lstm(p, f"rec.{direction}", rng, 4 * d, d)
        _lstm(p, f"row.{direction}", rng, 2 * d, d)
        _lstm(p, f"ref.{direction}", rng, d, d)
        if cfg.inter_att:
            _lstm(p, f"fuse.{direction}", rng, 4 * d, d)
    p["dec.init.w"] = _gauss(rng, (2 * d, d))
    p["dec.init.b"] = _zeros((d,))
    _lstm(p, "dec.lstm", rng, d, d)
    if cfg.inter_att:
        p["dec.attn.w"] = _gauss(rng, (d, 2 * d))
    else:
        p["dec.attn_r.w"] = _gauss(rng, (d, 2 * d))
        p["dec.attn_w.w"] = _gauss(rng, (d, 2 * d))
    c = cfg.ctx_width
    p["dec.pre.w"] = _gauss(rng, (d + c, d))
    p["dec.pre.b"] = _zeros((d,))
    p["dec.out.w"] = _gauss(rng, (d, v))
    p["dec.out.b"] = _zeros((v,))
    p["dec.gate.w"] = _gauss(rng, (d + c + d, 1))
    p["dec.gate.b"] = _zeros((1,))
    return p


def lstm_weights(params: dict[str, Tensor], prefix: str) -> LSTMWeights:
    return LSTMWeights(params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"])
