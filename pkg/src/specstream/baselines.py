"""Comparison models for the RTF benchmark.

Two baselines bracket the engine's cost profile:

* ``PlainRecurrent`` — two LSTM layers straight into the output head, no
  attention at all. Per-frame cost is constant; this is the speed floor.
* ``FrameSelfAttention`` — a non-streaming transformer over frame-rate
  features (2 layers, 4 heads, model dim 128, feedforward 256, sinusoidal
  positions), then a recurrent readout whose every frame runs multi-head
  cross-attention over all encoder positions. Total attention cost grows
  quadratically with frame count, which is the regime the pooled
  multi-rate model is built to avoid.

Both share the 19-dim output frame definition with the main model. The
attention score/context products can be tallied into a dedicated counter so
the quadratic term is measurable in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ShapeError
from .features import FRAME_DIM, FrameFeatureTrack
from .numerics import F32, LstmCellWeights, MacCounter, lstm_cell_step


class BaselineKind(Enum):
    PlainRecurrent = "lstm"
    FrameSelfAttention = "selfattn"


@dataclass
class PlainRecurrentWeights:
    lstm1: LstmCellWeights
    lstm2: LstmCellWeights
    out_w: np.ndarray  # (h2, FRAME_DIM)
    out_b: np.ndarray


def plain_recurrent_decode(
    track: FrameFeatureTrack,
    w: PlainRecurrentWeights,
    counter: MacCounter | None = None,
    sink=None,
) -> np.ndarray:
    """Two cell steps plus the output head per frame; no attention."""
    if track.feature_dim != w.lstm1.input_size:
        raise ShapeError(f"track width {track.feature_dim} vs lstm input {w.lstm1.input_size}")
    h1 = np.zeros(w.lstm1.hidden_size, dtype=F32)
    c1 = np.zeros_like(h1)
    h2 = np.zeros(w.lstm2.hidden_size, dtype=F32)
    c2 = np.zeros_like(h2)
    out_w64 = w.out_w.astype(np.float64)
    out_b64 = w.out_b.astype(np.float64)
    out = np.empty((track.n_frames, FRAME_DIM), dtype=F32)
    for t in range(track.n_frames):
        h1, c1 = lstm_cell_step(track.frames[t], h1, c1, w.lstm1, counter)
        h2, c2 = lstm_cell_step(h1, h2, c2, w.lstm2, counter)
        if counter is not None:
            counter.add_macs(w.out_w.shape[0] * w.out_w.shape[1])
        y = (np.asarray(h2, np.float64) @ out_w64 + out_b64).astype(F32)
        out[t] = y
        if sink is not None:
            sink(t, y)
    return out


@dataclass
class TransformerLayerWeights:
    wq: np.ndarray  # (d_model, d_model)
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    ff1_w: np.ndarray  # (d_model, d_ff)
    ff1_b: np.ndarray
    ff2_w: np.ndarray  # (d_ff, d_model)
    ff2_b: np.ndarray
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray


@dataclass
class SelfAttentionWeights:
    in_proj: np.ndarray  # (d_f, d_model)
    in_b: np.ndarray
    layers: list[TransformerLayerWeights]
    dec_lstm: LstmCellWeights  # frame features -> query state
    dec_query: np.ndarray  # (h, d_model)
    dec_ff1_w: np.ndarray  # (d_model, d_ff)
    dec_ff1_b: np.ndarray
    dec_ff2_w: np.ndarray  # (d_ff, d_model)
    dec_ff2_b: np.ndarray
    dec_ln1_g: np.ndarray
    dec_ln1_b: np.ndarray
    dec_ln2_g: np.ndarray
    dec_ln2_b: np.ndarray
    out_w: np.ndarray  # (d_model + h, FRAME_DIM)
    out_b: np.ndarray
    n_heads: int = 4

    def __post_init__(self):
        d_model = self.in_proj.shape[1]
        if self.dec_lstm.hidden_size != d_model:
            raise ShapeError(
                f"readout lstm width {self.dec_lstm.hidden_size} must equal model dim {d_model}"
            )
        if self.out_w.shape != (2 * d_model, FRAME_DIM):
            raise ShapeError(f"output head {self.out_w.shape} must be ({2 * d_model}, {FRAME_DIM})")
        if d_model % self.n_heads != 0:
            raise ShapeError(f"model dim {d_model} not divisible by {self.n_heads} heads")

    @property
    def d_model(self) -> int:
        return self.in_proj.shape[1]


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Standard fixed position encoding table, (length, dim) float32."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    idx = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * idx / dim)
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table.astype(F32)


def _layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + 1e-5) * gain + bias


def _count(counter: MacCounter | None, n: int) -> None:
    if counter is not None:
        counter.add_macs(n)


def self_attention_encode(
    frames: np.ndarray,
    w: SelfAttentionWeights,
    counter: MacCounter | None = None,
    attn_counter: MacCounter | None = None,
) -> np.ndarray:
    """Full-context transformer encoder over all frames (post-LN layers).

    ``attn_counter`` receives only the score and context product MACs — the
    two terms that scale with the square of the frame count.
    """
    length, d_in = frames.shape
    d_model = w.d_model
    n_heads = w.n_heads
    d_head = d_model // n_heads

    _count(counter, length * d_in * d_model)
    x = np.asarray(frames, np.float64) @ np.asarray(w.in_proj, np.float64) + w.in_b
    x += sinusoidal_positions(length, d_model)

    for layer in w.layers:
        for _ in ("q", "k", "v"):
            _count(counter, length * d_model * d_model)
        q = x @ np.asarray(layer.wq, np.float64)
        k = x @ np.asarray(layer.wk, np.float64)
        v = x @ np.asarray(layer.wv, np.float64)

        heads = []
        for h in range(n_heads):
            sl = slice(h * d_head, (h + 1) * d_head)
            _count(counter, length * length * d_head)
            _count(attn_counter, length * length * d_head)
            scores = q[:, sl] @ k[:, sl].T / math.sqrt(d_head)
            scores -= scores.max(axis=1, keepdims=True)
            np.exp(scores, out=scores)
            scores /= scores.sum(axis=1, keepdims=True)
            if counter is not None:
                counter.add_exps(length * length)
            _count(counter, length * length * d_head)
            _count(attn_counter, length * length * d_head)
            heads.append(scores @ v[:, sl])
            del scores
        attn = np.concatenate(heads, axis=1)
        _count(counter, length * d_model * d_model)
        x = _layer_norm(x + attn @ np.asarray(layer.wo, np.float64), layer.ln1_g, layer.ln1_b)

        d_ff = layer.ff1_w.shape[1]
        _count(counter, length * d_model * d_ff)
        hidden = np.maximum(x @ np.asarray(layer.ff1_w, np.float64) + layer.ff1_b, 0.0)
        _count(counter, length * d_ff * d_model)
        x = _layer_norm(x + hidden @ np.asarray(layer.ff2_w, np.float64) + layer.ff2_b, layer.ln2_g, layer.ln2_b)

    return x.astype(F32)


def self_attention_decode(
    track: FrameFeatureTrack,
    w: SelfAttentionWeights,
    counter: MacCounter | None = None,
    attn_counter: MacCounter | None = None,
    memory: np.ndarray | None = None,
    sink=None,
) -> np.ndarray:
    """Encode all frames, then read out one frame at a time.

    The readout is a standard decoder block driven by a small LSTM: the
    recurrent state queries multi-head cross-attention over every encoder
    position, then a position-wise feedforward with residual layer norms
    refines the attended vector. The cross-attention term makes the
    per-frame cost itself grow with utterance length.
    """
    if track.feature_dim != w.dec_lstm.input_size:
        raise ShapeError(f"track width {track.feature_dim} vs decoder lstm input {w.dec_lstm.input_size}")
    if memory is None:
        memory = self_attention_encode(track.frames, w, counter, attn_counter)
    mem64 = memory.astype(np.float64)
    length = track.n_frames
    d_model = w.d_model
    n_heads = w.n_heads
    d_head = d_model // n_heads

    h = np.zeros(w.dec_lstm.hidden_size, dtype=F32)
    c = np.zeros_like(h)
    dec_query64 = w.dec_query.astype(np.float64)
    ff1_w64 = w.dec_ff1_w.astype(np.float64)
    ff2_w64 = w.dec_ff2_w.astype(np.float64)
    out_w64 = w.out_w.astype(np.float64)
    out_b64 = w.out_b.astype(np.float64)
    scale = math.sqrt(d_head)
    ctx = np.empty(d_model, dtype=np.float64)
    out = np.empty((length, FRAME_DIM), dtype=F32)
    for t in range(length):
        h, c = lstm_cell_step(track.frames[t], h, c, w.dec_lstm, counter)
        h64 = np.asarray(h, np.float64)
        _count(counter, w.dec_query.shape[0] * d_model)
        q = h64 @ dec_query64
        for head in range(n_heads):
            sl = slice(head * d_head, (head + 1) * d_head)
            _count(counter, d_head * length)
            _count(attn_counter, d_head * length)
            scores = mem64[:, sl] @ q[sl] / scale
            e = np.exp(scores - scores.max())
            weights = e / e.sum()
            if counter is not None:
                counter.add_exps(length)
            _count(counter, d_head * length)
            _count(attn_counter, d_head * length)
            ctx[sl] = weights @ mem64[:, sl]
        x = _layer_norm(h64 + ctx, w.dec_ln1_g, w.dec_ln1_b)
        _count(counter, w.dec_ff1_w.shape[0] * w.dec_ff1_w.shape[1])
        hidden = np.maximum(x @ ff1_w64 + w.dec_ff1_b, 0.0)
        _count(counter, w.dec_ff2_w.shape[0] * w.dec_ff2_w.shape[1])
        x = _layer_norm(x + hidden @ ff2_w64 + w.dec_ff2_b, w.dec_ln2_g, w.dec_ln2_b)
        _count(counter, w.out_w.shape[0] * w.out_w.shape[1])
        y = (np.concatenate([x, h64]) @ out_w64 + out_b64).astype(F32)
        out[t] = y
        if sink is not None:
            sink(t, y)
    return out
