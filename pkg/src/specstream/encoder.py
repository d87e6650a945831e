"""Per-level source encoding: 1-D CNN, dynamic max-pooling, K/V projections.

Each linguistic level (word, syllable, phone) is encoded independently:
two same-length zero-padded 1-D convolutions with ReLU after each layer,
then max-pooling whose stride adapts to the input length so the pooled
length never exceeds the configured cap, then learned key and value
projections. The pooled cap is what bounds the decoder's per-frame attention
cost regardless of utterance length; ``l_max=None`` disables pooling (the
ablation configuration) and the encoding length then tracks the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import F32, MacCounter, matmul, relu

LEVELS = ("word", "syllable", "phone")


@dataclass
class SourceEncoding:
    """Pooled keys/values for one level, frozen for an utterance."""

    level: str
    keys: np.ndarray
    values: np.ndarray
    pooled_len: int
    stride: int
    _keys64: np.ndarray = field(init=False, repr=False)
    _values64: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.keys.shape != self.values.shape:
            raise ShapeError(f"keys {self.keys.shape} and values {self.values.shape} must match")
        if self.keys.shape[0] != self.pooled_len:
            raise ShapeError(f"{self.level}: {self.keys.shape[0]} rows but pooled_len {self.pooled_len}")
        self._keys64 = self.keys.astype(np.float64)
        self._values64 = self.values.astype(np.float64)

    @property
    def d_k(self) -> int:
        return self.keys.shape[1]


@dataclass
class EncoderLevelWeights:
    conv1_w: np.ndarray  # (d, d, K)
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    key_proj: np.ndarray  # (d, d_k)
    value_proj: np.ndarray


@dataclass
class EncoderWeights:
    word: EncoderLevelWeights
    syllable: EncoderLevelWeights
    phone: EncoderLevelWeights

    def level(self, name: str) -> EncoderLevelWeights:
        return getattr(self, name)


def conv1d_same(
    x: np.ndarray,
    filters: np.ndarray,
    bias: np.ndarray,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Same-length 1-D convolution over (L, d_in) with zero padding.

    ``filters`` is (d_out, d_in, K) with K odd; output row n, channel m is
    sum_c sum_k filters[m, c, k] * x[n + k - K//2, c], reading zeros outside
    the input.
    """
    if x.ndim != 2:
        raise ShapeError(f"conv input must be (L, d), got {x.shape}")
    if filters.ndim != 3 or filters.shape[1] != x.shape[1]:
        raise ShapeError(f"filters {filters.shape} do not fit input {x.shape}")
    kernel = filters.shape[2]
    if kernel % 2 == 0:
        raise ConfigError(f"conv kernel size must be odd, got {kernel}")
    length, d_in = x.shape
    d_out = filters.shape[0]
    if bias.shape != (d_out,):
        raise ShapeError(f"conv bias {bias.shape} vs {d_out} output channels")
    if counter is not None:
        counter.add_macs(length * d_out * d_in * kernel)

    half = kernel // 2
    padded = np.zeros((length + kernel - 1, d_in), dtype=np.float64)
    padded[half : half + length] = x
    acc = np.zeros((length, d_out), dtype=np.float64)
    for k in range(kernel):
        acc += padded[k : k + length] @ filters[:, :, k].astype(np.float64).T
    return (acc + bias.astype(np.float64)).astype(F32)


def dynamic_max_pool(x_hat: np.ndarray, l_max: int) -> tuple[np.ndarray, int]:
    """Columnwise max over stride-sized windows; output capped at ``l_max`` rows.

    The stride is ceil(L / l_max) and the input is zero-padded up to
    stride * pooled_len rows before windowing, so trailing windows may mix
    real values with padding zeros.
    """
    if x_hat.ndim != 2 or x_hat.shape[0] < 1:
        raise ShapeError(f"pool input must be a non-empty (L, d) matrix, got {x_hat.shape}")
    if l_max < 1:
        raise ConfigError(f"l_max must be >= 1, got {l_max}")
    length, d = x_hat.shape
    stride = math.ceil(length / l_max)
    pooled_len = min(length, l_max)
    if stride == 1:
        return x_hat.astype(F32).copy(), 1
    padded = np.zeros((stride * pooled_len, d), dtype=x_hat.dtype)
    padded[:length] = x_hat
    pooled = padded.reshape(pooled_len, stride, d).max(axis=1)
    return pooled.astype(F32), stride


def encode_source(
    x: np.ndarray,
    w: EncoderLevelWeights,
    l_max: int | None,
    level: str = "word",
    counter: MacCounter | None = None,
) -> SourceEncoding:
    """CNN -> dynamic max-pool -> key/value projections for one level.

    ``l_max=None`` turns pooling off; the encoding then has one row per
    input position.
    """
    h = relu(conv1d_same(x, w.conv1_w, w.conv1_b, counter))
    h = relu(conv1d_same(h, w.conv2_w, w.conv2_b, counter))
    if l_max is None:
        pooled, stride = h, 1
    else:
        pooled, stride = dynamic_max_pool(h, l_max)
    keys = matmul(pooled, w.key_proj, counter)
    values = matmul(pooled, w.value_proj, counter)
    return SourceEncoding(level=level, keys=keys, values=values, pooled_len=pooled.shape[0], stride=stride)


@dataclass
class EncodingSet:
    """The three per-level encodings for one utterance."""

    word: SourceEncoding
    syllable: SourceEncoding
    phone: SourceEncoding

    def __iter__(self):
        return iter((self.word, self.syllable, self.phone))


def level_features(tree) -> dict[str, np.ndarray]:
    """The encoder's input dict from a context tree's three feature matrices."""
    return {"word": tree.word_feats, "syllable": tree.syllable_feats, "phone": tree.phone_feats}


def encode_all(
    feats_by_level: dict[str, np.ndarray],
    weights: EncoderWeights,
    l_max: int | None,
    counter: MacCounter | None = None,
) -> EncodingSet:
    encs = {
        name: encode_source(feats_by_level[name], weights.level(name), l_max, name, counter)
        for name in LEVELS
    }
    return EncodingSet(**encs)
