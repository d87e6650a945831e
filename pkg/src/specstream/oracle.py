"""Scalar-loop reference implementations of every kernel.

Everything here is a deliberately naive transcription: explicit loops,
64-bit accumulators, values rounded to 32-bit at the same places the fast
implementations round (op outputs, recurrent state, context vectors). No
code is shared with the fast paths — these functions take raw arrays and
derive sizes from them — so a disagreement localizes a bug to one side of
the boundary. The loops are compiled with numba so full-utterance
comparisons finish in seconds; the compiled code is still the literal
scalar transcription.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ShapeError

__all__ = [
    "OracleReport",
    "compare",
    "mse_loss",
    "oracle_attention",
    "oracle_batch_decode",
    "oracle_combine",
    "oracle_conv1d",
    "oracle_lstm_cell",
    "oracle_maxpool",
]


@dataclass
class OracleReport:
    """Outcome of comparing a fast implementation against its oracle."""

    max_abs_err: float
    max_rel_err: float
    compared: int

    def __post_init__(self):
        if self.compared < 1:
            raise ShapeError("nothing was compared")

    def within(self, rel_tol: float) -> bool:
        return self.max_rel_err <= rel_tol


def compare(got, want, floor: float = 1e-3) -> OracleReport:
    """Elementwise error report between two arrays of the same shape.

    Relative error divides by ``max(|want|, floor)``: elements whose true
    magnitude is below ``floor`` are judged on absolute error at the floor
    scale, so cancellation near zero does not produce spurious blowups.
    """
    a = np.asarray(got, dtype=np.float64)
    b = np.asarray(want, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare shapes {a.shape} and {b.shape}")
    abs_err = np.abs(a - b)
    rel = abs_err / np.maximum(np.abs(b), floor)
    return OracleReport(
        max_abs_err=float(abs_err.max(initial=0.0)),
        max_rel_err=float(rel.max(initial=0.0)),
        compared=a.size,
    )


@njit(cache=True)
def _mse(pred, target):
    total = 0.0
    n = 0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            d = np.float64(pred[i, j]) - np.float64(target[i, j])
            total += d * d
            n += 1
    return total / n


def mse_loss(pred, target) -> float:
    """Mean over frames and dims of the squared difference."""
    p = np.atleast_2d(np.asarray(pred, dtype=np.float32))
    t = np.atleast_2d(np.asarray(target, dtype=np.float32))
    if p.shape != t.shape:
        raise ShapeError(f"loss shapes differ: {p.shape} vs {t.shape}")
    return float(_mse(p, t))


# --- kernels -------------------------------------------------------------


@njit(cache=True)
def _conv1d_same(x, filters, bias):
    length, d_in = x.shape
    d_out, _, k = filters.shape
    half = k // 2
    out = np.empty((length, d_out), dtype=np.float32)
    for t in range(length):
        for o in range(d_out):
            acc = bias[o]
            for i in range(d_in):
                for tap in range(k):
                    src = t + tap - half
                    if 0 <= src < length:
                        acc += x[src, i] * filters[o, i, tap]
            out[t, o] = acc
    return out


def oracle_conv1d(x, filters, bias) -> np.ndarray:
    """Same-padded 1-D convolution over the sequence axis, one tap at a time."""
    x64 = np.ascontiguousarray(np.asarray(x), dtype=np.float64)
    f64 = np.ascontiguousarray(np.asarray(filters), dtype=np.float64)
    b64 = np.ascontiguousarray(np.asarray(bias), dtype=np.float64)
    if x64.ndim != 2 or f64.ndim != 3 or f64.shape[1] != x64.shape[1]:
        raise ShapeError(f"conv oracle: x {x64.shape} vs filters {f64.shape}")
    if f64.shape[2] % 2 != 1:
        raise ShapeError("conv oracle: kernel width must be odd")
    if b64.shape != (f64.shape[0],):
        raise ShapeError(f"conv oracle: bias {b64.shape} vs {f64.shape[0]} filters")
    return _conv1d_same(x64, f64, b64)


@njit(cache=True)
def _maxpool(x, pooled_len, stride):
    d = x.shape[1]
    length = x.shape[0]
    out = np.empty((pooled_len, d), dtype=np.float32)
    for j in range(pooled_len):
        for col in range(d):
            best = -1e300
            for s in range(stride):
                src = j * stride + s
                v = x[src, col] if src < length else 0.0
                if v > best:
                    best = v
            out[j, col] = best
    return out


def oracle_maxpool(x, l_max: int) -> tuple[np.ndarray, int]:
    """Stride ``ceil(L / l_max)`` window max over the zero-padded sequence."""
    x64 = np.ascontiguousarray(np.atleast_2d(np.asarray(x)), dtype=np.float64)
    if l_max < 1:
        raise ShapeError(f"pool target must be >= 1, got {l_max}")
    length = x64.shape[0]
    if length < 1:
        raise ShapeError("cannot pool an empty sequence")
    stride = -(-length // l_max)
    pooled_len = min(length, l_max)
    return _maxpool(x64, pooled_len, stride), stride


@njit(cache=True)
def _lstm_cell(x, h_prev, c_prev, w_x, w_h, bias):
    hidden = h_prev.shape[0]
    d_in = x.shape[0]
    h_out = np.empty(hidden, dtype=np.float32)
    c_out = np.empty(hidden, dtype=np.float32)
    for j in range(hidden):
        zi = bias[j]
        zf = bias[hidden + j]
        zg = bias[2 * hidden + j]
        zo = bias[3 * hidden + j]
        for i in range(d_in):
            v = np.float64(x[i])
            zi += w_x[j, i] * v
            zf += w_x[hidden + j, i] * v
            zg += w_x[2 * hidden + j, i] * v
            zo += w_x[3 * hidden + j, i] * v
        for i in range(hidden):
            v = np.float64(h_prev[i])
            zi += w_h[j, i] * v
            zf += w_h[hidden + j, i] * v
            zg += w_h[2 * hidden + j, i] * v
            zo += w_h[3 * hidden + j, i] * v
        gi = 1.0 / (1.0 + np.exp(-zi))
        gf = 1.0 / (1.0 + np.exp(-zf))
        gg = np.tanh(zg)
        go = 1.0 / (1.0 + np.exp(-zo))
        c_new = gf * np.float64(c_prev[j]) + gi * gg
        c_out[j] = c_new
        h_out[j] = go * np.tanh(c_new)
    return h_out, c_out


def oracle_lstm_cell(x, h_prev, c_prev, w_x, w_h, bias):
    """One recurrent cell step, gates ordered (input, forget, candidate, output)."""
    x32 = np.ascontiguousarray(np.asarray(x), dtype=np.float32)
    h32 = np.ascontiguousarray(np.asarray(h_prev), dtype=np.float32)
    c32 = np.ascontiguousarray(np.asarray(c_prev), dtype=np.float32)
    wx64 = np.ascontiguousarray(np.asarray(w_x), dtype=np.float64)
    wh64 = np.ascontiguousarray(np.asarray(w_h), dtype=np.float64)
    b64 = np.ascontiguousarray(np.asarray(bias), dtype=np.float64)
    hidden = h32.shape[0]
    if wx64.shape != (4 * hidden, x32.shape[0]) or wh64.shape != (4 * hidden, hidden):
        raise ShapeError(f"cell oracle: weights {wx64.shape}/{wh64.shape} vs x {x32.shape}, h {h32.shape}")
    if b64.shape != (4 * hidden,) or c32.shape != (hidden,):
        raise ShapeError("cell oracle: bias or cell state size mismatch")
    return _lstm_cell(x32, h32, c32, wx64, wh64, b64)


@njit(cache=True)
def _attention(q, keys, values):
    rows, d_k = keys.shape
    d_v = values.shape[1]
    scale = np.sqrt(np.float64(d_k))
    scores = np.empty(rows, dtype=np.float64)
    for j in range(rows):
        acc = 0.0
        for m in range(d_k):
            acc += np.float64(q[m]) * keys[j, m]
        scores[j] = acc / scale
    top = scores[0]
    for j in range(1, rows):
        if scores[j] > top:
            top = scores[j]
    total = 0.0
    for j in range(rows):
        scores[j] = np.exp(scores[j] - top)
        total += scores[j]
    ctx = np.empty(d_v, dtype=np.float32)
    for d in range(d_v):
        acc = 0.0
        for j in range(rows):
            acc += scores[j] / total * values[j, d]
        ctx[d] = acc
    return ctx


def oracle_attention(q, keys, values) -> np.ndarray:
    """Softmax(q·K^T / sqrt(d_k)) · V, written out longhand."""
    q32 = np.ascontiguousarray(np.asarray(q), dtype=np.float32)
    k64 = np.ascontiguousarray(np.asarray(keys), dtype=np.float64)
    v64 = np.ascontiguousarray(np.asarray(values), dtype=np.float64)
    if k64.ndim != 2 or v64.ndim != 2 or k64.shape[0] != v64.shape[0]:
        raise ShapeError(f"attention oracle: keys {k64.shape} vs values {v64.shape}")
    if q32.shape != (k64.shape[1],):
        raise ShapeError(f"attention oracle: query {q32.shape} vs key width {k64.shape[1]}")
    return _attention(q32, k64, v64)


@njit(cache=True)
def _combine(cat, w):
    d_in, d_out = w.shape
    out = np.empty(d_out, dtype=np.float32)
    for j in range(d_out):
        acc = 0.0
        for i in range(d_in):
            acc += np.float64(cat[i]) * w[i, j]
        out[j] = acc
    return out


def oracle_combine(c_w, c_s, c_p, w) -> np.ndarray:
    """Concatenated per-level contexts through the mixing matrix."""
    cat = np.concatenate(
        [
            np.asarray(c_w, dtype=np.float32),
            np.asarray(c_s, dtype=np.float32),
            np.asarray(c_p, dtype=np.float32),
        ]
    )
    w64 = np.ascontiguousarray(np.asarray(w), dtype=np.float64)
    if w64.ndim != 2 or w64.shape[0] != cat.shape[0]:
        raise ShapeError(f"combine oracle: matrix {w64.shape} vs contexts ({cat.shape[0]},)")
    return _combine(cat, w64)


# --- full batch decode ---------------------------------------------------


@njit(cache=True)
def _batch_decode(
    frames,
    feedback,
    w1x,
    w1h,
    b1,
    w2x,
    w2h,
    b2,
    qw,
    qs,
    qp,
    kw,
    vw,
    ks,
    vs,
    kp,
    vp,
    combine_w,
    out_w,
    out_b,
):
    n_frames, d_f = frames.shape
    h1_size = w1h.shape[1]
    h2_size = w2h.shape[1]
    frame_dim = out_b.shape[0]
    d_cw = vw.shape[1]
    d_cs = vs.shape[1]
    d_cp = vp.shape[1]
    d_model = combine_w.shape[1]

    h1 = np.zeros(h1_size, dtype=np.float32)
    c1 = np.zeros(h1_size, dtype=np.float32)
    h2 = np.zeros(h2_size, dtype=np.float32)
    c2 = np.zeros(h2_size, dtype=np.float32)
    y = np.zeros(frame_dim, dtype=np.float32)
    d_in = d_f + frame_dim if feedback else d_f
    u = np.zeros(d_in, dtype=np.float32)
    out = np.empty((n_frames, frame_dim), dtype=np.float32)

    for t in range(n_frames):
        for i in range(d_f):
            u[i] = frames[t, i]
        if feedback:
            for i in range(frame_dim):
                u[d_f + i] = y[i]
        h1, c1 = _lstm_cell(u, h1, c1, w1x, w1h, b1)
        h2, c2 = _lstm_cell(h1, h2, c2, w2x, w2h, b2)

        q_word = np.empty(qw.shape[1], dtype=np.float32)
        for j in range(qw.shape[1]):
            acc = 0.0
            for i in range(h2_size):
                acc += np.float64(h2[i]) * qw[i, j]
            q_word[j] = acc
        q_syl = np.empty(qs.shape[1], dtype=np.float32)
        for j in range(qs.shape[1]):
            acc = 0.0
            for i in range(h2_size):
                acc += np.float64(h2[i]) * qs[i, j]
            q_syl[j] = acc
        q_pho = np.empty(qp.shape[1], dtype=np.float32)
        for j in range(qp.shape[1]):
            acc = 0.0
            for i in range(h2_size):
                acc += np.float64(h2[i]) * qp[i, j]
            q_pho[j] = acc

        c_word = _attention(q_word, kw, vw)
        c_syl = _attention(q_syl, ks, vs)
        c_pho = _attention(q_pho, kp, vp)

        context = np.zeros(d_model, dtype=np.float64)
        for j in range(d_model):
            acc = 0.0
            for i in range(d_cw):
                acc += np.float64(c_word[i]) * combine_w[i, j]
            for i in range(d_cs):
                acc += np.float64(c_syl[i]) * combine_w[d_cw + i, j]
            for i in range(d_cp):
                acc += np.float64(c_pho[i]) * combine_w[d_cw + d_cs + i, j]
            context[j] = acc

        for j in range(frame_dim):
            acc = out_b[j]
            for i in range(d_model):
                acc += context[i] * out_w[i, j]
            for i in range(h2_size):
                acc += np.float64(h2[i]) * out_w[d_model + i, j]
            y[j] = acc
        for j in range(frame_dim):
            out[t, j] = y[j]
    return out


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a), dtype=np.float64)


def oracle_batch_decode(track, encodings, w) -> np.ndarray:
    """All output frames in one naive pass; ground truth for the stream.

    Duck-typed: ``track`` needs ``.frames``, ``encodings`` needs
    ``.word/.syllable/.phone`` each with ``.keys``/``.values``, and ``w``
    mirrors the decoder weight bundle. Only raw arrays are touched.
    """
    frames = np.ascontiguousarray(np.asarray(track.frames), dtype=np.float32)
    if frames.ndim != 2:
        raise ShapeError(f"track frames must be 2-d, got {frames.shape}")
    return _batch_decode(
        frames,
        bool(w.feedback),
        _f64(w.lstm1.w_x),
        _f64(w.lstm1.w_h),
        _f64(w.lstm1.bias),
        _f64(w.lstm2.w_x),
        _f64(w.lstm2.w_h),
        _f64(w.lstm2.bias),
        _f64(w.query_word),
        _f64(w.query_syllable),
        _f64(w.query_phone),
        _f64(encodings.word.keys),
        _f64(encodings.word.values),
        _f64(encodings.syllable.keys),
        _f64(encodings.syllable.values),
        _f64(encodings.phone.keys),
        _f64(encodings.phone.values),
        _f64(w.combine),
        _f64(w.out_w),
        _f64(w.out_b),
    )
