"""Streaming spectrum-model inference with multi-rate attention.

The pipeline: a context tree (sentence/phrase/word/syllable/phone features
with phone durations) is encoded once per utterance into three fixed-size
key/value memories, then a frame-rate recurrent decoder attends over them
and emits one 19-dim spectrum frame per step at constant per-frame cost.
Baselines, scalar-loop oracles, and an RTF benchmark live alongside.
"""

from .decoder import DecoderState, DecoderWeights, attend_head, decode_step, decode_stream, decode_to_array
from .encoder import EncoderWeights, EncodingSet, SourceEncoding, dynamic_max_pool, encode_all, encode_source
from .errors import SpecStreamError
from .features import (
    FRAME_DIM,
    FRAME_SHIFT_MS,
    ContextTree,
    CorpusSpec,
    FrameFeatureTrack,
    SpectrumFrame,
    parse_context_tree,
    serialize_context_tree,
    synth_corpus,
    unroll_frames,
)
from .numerics import MacCounter
from .rng import SplitMix64
from .weights import ModelConfig, ModelWeights, build_multirate, weights_init, weights_load, weights_save

__version__ = "0.1.0"

__all__ = [
    "ContextTree",
    "CorpusSpec",
    "DecoderState",
    "DecoderWeights",
    "EncoderWeights",
    "EncodingSet",
    "FRAME_DIM",
    "FRAME_SHIFT_MS",
    "FrameFeatureTrack",
    "MacCounter",
    "ModelConfig",
    "ModelWeights",
    "SourceEncoding",
    "SpecStreamError",
    "SpectrumFrame",
    "SplitMix64",
    "attend_head",
    "build_multirate",
    "decode_step",
    "decode_stream",
    "decode_to_array",
    "dynamic_max_pool",
    "encode_all",
    "encode_source",
    "parse_context_tree",
    "serialize_context_tree",
    "synth_corpus",
    "unroll_frames",
    "weights_init",
    "weights_load",
    "weights_save",
]
