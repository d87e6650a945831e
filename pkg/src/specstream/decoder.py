"""Streaming decoder: one recurrent step per frame, attention per level.

The decode loop carries a fixed-size :class:`DecoderState` (two LSTM layers'
hidden/cell vectors plus the previous output frame). Each step runs the frame
feature (optionally concatenated with the previous output) through both LSTM
layers, uses the top hidden state as the attention query against the three
frozen source encodings, combines the per-level contexts through a learned
matrix, and predicts the 19-dim frame from (context, hidden). Per-frame cost
is a closed-form function of the model dims and the pooled encoding lengths
only, which is what keeps the real-time factor flat in utterance length.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .encoder import EncodingSet, SourceEncoding
from .errors import DecodeAborted, FormatError, ShapeError
from .features import FRAME_DIM, FrameFeatureTrack
from .numerics import F32, LstmCellWeights, MacCounter, lstm_cell_step, softmax


@dataclass
class DecoderWeights:
    """All learned decoder parameters plus the feedback flag."""

    lstm1: LstmCellWeights
    lstm2: LstmCellWeights
    query_word: np.ndarray  # (h2, d_k_w)
    query_syllable: np.ndarray
    query_phone: np.ndarray
    combine: np.ndarray  # (d_w + d_s + d_p, d_model)
    out_w: np.ndarray  # (d_model + h2, FRAME_DIM)
    out_b: np.ndarray
    feedback: bool = True
    _query_all64: np.ndarray = field(init=False, repr=False)
    _combine64: np.ndarray = field(init=False, repr=False)
    _out_w64: np.ndarray = field(init=False, repr=False)
    _out_b64: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h2 = self.lstm2.hidden_size
        for name, q in (("word", self.query_word), ("syllable", self.query_syllable), ("phone", self.query_phone)):
            if q.ndim != 2 or q.shape[0] != h2:
                raise ShapeError(f"{name} query projection {q.shape} must be ({h2}, d_k)")
        d_heads = self.query_word.shape[1] + self.query_syllable.shape[1] + self.query_phone.shape[1]
        if self.combine.shape[0] != d_heads:
            raise ShapeError(f"combine matrix {self.combine.shape} vs concatenated head dim {d_heads}")
        d_model = self.combine.shape[1]
        if self.out_w.shape != (d_model + h2, FRAME_DIM) or self.out_b.shape != (FRAME_DIM,):
            raise ShapeError(f"output head {self.out_w.shape}/{self.out_b.shape} inconsistent with d_model {d_model}")
        expected_in = self.lstm1.input_size - (FRAME_DIM if self.feedback else 0)
        if expected_in < 1:
            raise ShapeError("lstm1 input smaller than the feedback frame")
        self._query_all64 = np.hstack(
            [self.query_word, self.query_syllable, self.query_phone]
        ).astype(np.float64)
        self._combine64 = self.combine.astype(np.float64)
        self._out_w64 = self.out_w.astype(np.float64)
        self._out_b64 = self.out_b.astype(np.float64)

    @property
    def frame_input_dim(self) -> int:
        return self.lstm1.input_size - (FRAME_DIM if self.feedback else 0)

    @property
    def head_dims(self) -> tuple[int, int, int]:
        return (self.query_word.shape[1], self.query_syllable.shape[1], self.query_phone.shape[1])


@dataclass
class DecoderState:
    """Everything the stream needs between frames; nothing else persists."""

    h1: np.ndarray
    c1: np.ndarray
    h2: np.ndarray
    c2: np.ndarray
    y_prev: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, h1_size: int = 256, h2_size: int = 128) -> "DecoderState":
        z = lambda n: np.zeros(n, dtype=F32)
        return cls(h1=z(h1_size), c1=z(h1_size), h2=z(h2_size), c2=z(h2_size), y_prev=z(FRAME_DIM))

    def to_bytes(self) -> bytes:
        """Serialize for suspend/resume; resuming reproduces the run bit-exactly."""
        parts = [struct.pack("<4sIQ", b"SDS1", len(self.h1), self.t)]
        parts.append(struct.pack("<I", len(self.h2)))
        for arr in (self.h1, self.c1, self.h2, self.c2, self.y_prev):
            parts.append(arr.astype("<f4").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DecoderState":
        if len(blob) < 20 or blob[:4] != b"SDS1":
            raise FormatError("not a serialized decoder state")
        _, h1_size, t = struct.unpack("<4sIQ", blob[:16])
        (h2_size,) = struct.unpack("<I", blob[16:20])
        sizes = (h1_size, h1_size, h2_size, h2_size, FRAME_DIM)
        expected = 20 + 4 * sum(sizes)
        if len(blob) != expected:
            raise FormatError(f"decoder state payload is {len(blob)} bytes, expected {expected}")
        offset = 20
        arrays = []
        for n in sizes:
            arrays.append(np.frombuffer(blob, dtype="<f4", count=n, offset=offset).copy())
            offset += 4 * n
        h1, c1, h2, c2, y_prev = arrays
        return cls(h1=h1, c1=c1, h2=h2, c2=c2, y_prev=y_prev, t=int(t))


def attend_head(
    q: np.ndarray,
    enc: SourceEncoding,
    counter: MacCounter | None = None,
    with_weights: bool = False,
):
    """Scaled dot-product attention of one query over one level's encoding."""
    d_k = enc.d_k
    if q.shape != (d_k,):
        raise ShapeError(f"query {q.shape} vs encoding width {d_k}")
    if counter is not None:
        counter.add_macs(2 * d_k * enc.pooled_len)
        counter.add_exps(enc.pooled_len)
    scores = (enc._keys64 @ np.asarray(q, np.float64)) / math.sqrt(d_k)
    e = np.exp(scores - scores.max())
    weights = e / e.sum()
    ctx = (weights @ enc._values64).astype(F32)
    if with_weights:
        return ctx, weights.astype(F32)
    return ctx


def attention_weights(q: np.ndarray, enc: SourceEncoding) -> np.ndarray:
    """The softmax distribution ``attend_head`` puts over encoding rows."""
    scores = (enc._keys64 @ np.asarray(q, np.float64)) / math.sqrt(enc.d_k)
    return softmax(scores.astype(F32))


def combine_heads(
    c_w: np.ndarray,
    c_s: np.ndarray,
    c_p: np.ndarray,
    w: np.ndarray,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Concatenate the per-level contexts and mix through the combine matrix."""
    cat = np.concatenate([c_w, c_s, c_p])
    if w.ndim != 2 or w.shape[0] != cat.shape[0]:
        raise ShapeError(f"combine matrix {w.shape} vs concatenated contexts ({cat.shape[0]},)")
    if counter is not None:
        counter.add_macs(w.shape[0] * w.shape[1])
    return (np.asarray(cat, np.float64) @ np.asarray(w, np.float64)).astype(F32)


def decode_step(
    x_f: np.ndarray,
    state: DecoderState,
    encodings: EncodingSet,
    w: DecoderWeights,
    counter: MacCounter | None = None,
) -> tuple[np.ndarray, DecoderState]:
    """Produce frame t and the successor state."""
    if x_f.shape != (w.frame_input_dim,):
        raise ShapeError(f"frame features {x_f.shape} vs expected ({w.frame_input_dim},)")
    u = np.concatenate([x_f, state.y_prev]) if w.feedback else x_f
    h1, c1 = lstm_cell_step(u, state.h1, state.c1, w.lstm1, counter)
    h2, c2 = lstm_cell_step(h1, state.h2, state.c2, w.lstm2, counter)

    d_w, d_s, d_p = w.head_dims
    if counter is not None:
        counter.add_macs(w.lstm2.hidden_size * (d_w + d_s + d_p))
    q_all = np.asarray(h2, np.float64) @ w._query_all64
    q_all32 = q_all.astype(F32)
    c_w = attend_head(q_all32[:d_w], encodings.word, counter)
    c_s = attend_head(q_all32[d_w : d_w + d_s], encodings.syllable, counter)
    c_p = attend_head(q_all32[d_w + d_s :], encodings.phone, counter)

    cat = np.concatenate([c_w, c_s, c_p]).astype(np.float64)
    context = cat @ w._combine64
    if counter is not None:
        counter.add_macs(w.combine.shape[0] * w.combine.shape[1])
        counter.add_macs(w.out_w.shape[0] * w.out_w.shape[1])
    hidden_cat = np.concatenate([context, np.asarray(h2, np.float64)])
    y = (hidden_cat @ w._out_w64 + w._out_b64).astype(F32)

    new_state = DecoderState(h1=h1, c1=c1, h2=h2, c2=c2, y_prev=y, t=state.t + 1)
    return y, new_state


def decode_stream(
    track: FrameFeatureTrack,
    encodings: EncodingSet,
    w: DecoderWeights,
    sink,
    state: DecoderState | None = None,
    counter: MacCounter | None = None,
) -> int:
    """Run the per-frame loop, calling ``sink(index, frame)`` after each step.

    Memory use is constant in track length: only the state and the current
    frame are live. A sink exception aborts the stream; the raised
    ``DecodeAborted`` carries how many frames were delivered. Returns the
    frame count on success.
    """
    if state is None:
        state = DecoderState.initial(w.lstm1.hidden_size, w.lstm2.hidden_size)
    emitted = 0
    frames = track.frames
    for t in range(state.t, track.n_frames):
        y, state = decode_step(frames[t], state, encodings, w, counter)
        try:
            sink(t, y)
        except Exception as e:
            raise DecodeAborted(emitted) from e
        emitted += 1
    return emitted


def decode_to_array(
    track: FrameFeatureTrack,
    encodings: EncodingSet,
    w: DecoderWeights,
    state: DecoderState | None = None,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Collect the streamed frames into an (L_f, 19) array."""
    out = np.empty((track.n_frames, FRAME_DIM), dtype=F32)
    start = 0 if state is None else state.t

    def sink(t, y):
        out[t] = y

    decode_stream(track, encodings, w, sink, state=state, counter=counter)
    return out[start:]
