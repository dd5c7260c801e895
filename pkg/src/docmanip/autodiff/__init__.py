"""Minimal reverse-mode automatic differentiation on numpy arrays."""
from . import ops
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import NondeterministicLoss, check_op, grad_check
from .nn import LSTMWeights, bilstm_encode, lstm_cell, lstm_step
from .ops import softmax_axis
from .optim import AdamState, adam_step, clip_grad_norm
from .tensor import Tensor, backward, default_dtype, get_default_dtype, no_grad, set_default_dtype

__all__ = [
    "AdamState",
    "CheckpointError",
    "LSTMWeights",
    "NondeterministicLoss",
    "Tensor",
    "adam_step",
    "backward",
    "bilstm_encode",
    "check_op",
    "clip_grad_norm",
    "default_dtype",
    "get_default_dtype",
    "grad_check",
    "load_checkpoint",
    "lstm_cell",
    "lstm_step",
    "no_grad",
    "ops",
    "save_checkpoint",
    "set_default_dtype",
    "softmax_axis",
]
