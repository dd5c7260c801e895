"""Encoder, interactive attention and copy decoder."""
from .batch import Batch, make_batch
from .core import Model
from .decoder import (
    DecoderState,
    Encoded,
    StepDistribution,
    decode_step,
    greedy_decode,
    init_decoder_state,
    mix_distribution,
)
from .encoders import RecordBank, ReferenceBank, encode_reference, encode_table, initial_record_representation
from .interactive import FusionBank, coattend, compute_affinity, fuse_bank, interactive_attention
from .params import ModelConfig, init_params, lstm_weights
from .search import GenerationResult, beam_search, beam_search_core

__all__ = [
    "Batch", "DecoderState", "Encoded", "FusionBank", "GenerationResult", "Model", "ModelConfig",
    "RecordBank", "ReferenceBank", "StepDistribution", "beam_search", "beam_search_core", "coattend",
    "compute_affinity", "decode_step", "encode_reference", "encode_table", "fuse_bank",
    "greedy_decode", "init_decoder_state", "init_params", "initial_record_representation",
    "interactive_attention", "lstm_weights", "make_batch", "mix_distribution",
]
