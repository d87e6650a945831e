"""Dense kernels underneath the engine: matmul, softmax, linear, LSTM cell.

Matrices are C-contiguous float32 ``numpy.ndarray``s (row-major). Storage is
32-bit everywhere; accumulation happens in 64-bit intermediates so results are
reproducible across BLAS builds to well under float32 resolution.

Multiply-accumulate (MAC) counting is opt-in per call: pass a ``MacCounter``
and it is bumped by the exact naive-loop operation count; pass ``None`` (the
default) and the hot path pays nothing. Counts are pure functions of operand
shapes, never of data. Conventions: matrix/vector products count rows*k*cols,
bias adds and scalar scalings are free, the LSTM cell additionally counts its
3h elementwise gate products, and ``exps`` counts softmax exponentials only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

F32 = np.float32


@dataclass
class MacCounter:
    """Tally of multiply-accumulates and softmax exponentials."""

    macs: int = 0
    exps: int = 0

    def add_macs(self, n: int) -> None:
        self.macs += n

    def add_exps(self, n: int) -> None:
        self.exps += n


@dataclass
class LstmCellWeights:
    """One LSTM cell; gate rows ordered (input, forget, candidate, output).

    ``w_x`` is (4h, d_in), ``w_h`` is (4h, h), ``bias`` is (4h,). The same
    row layout is used in weight files.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    bias: np.ndarray
    _stacked64: np.ndarray = field(init=False, repr=False)
    _bias64: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.w_x.ndim != 2 or self.w_h.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("LSTM weights must be 2-D matrices plus a 1-D bias")
        four_h = self.w_x.shape[0]
        if four_h % 4 != 0 or self.w_h.shape[0] != four_h or self.bias.shape[0] != four_h:
            raise ShapeError(
                f"inconsistent LSTM gate rows: {self.w_x.shape}, {self.w_h.shape}, {self.bias.shape}"
            )
        if self.w_h.shape[1] * 4 != four_h:
            raise ShapeError(f"hidden size {self.w_h.shape[1]} does not match gate rows {four_h}")
        # Fused (4h, d_in + h) float64 copy: one matvec per step instead of
        # two, and no per-step conversion cost on the hot path.
        self._stacked64 = np.hstack([self.w_x, self.w_h]).astype(np.float64)
        self._bias64 = self.bias.astype(np.float64)

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_x.shape[1]

    @property
    def step_macs(self) -> int:
        h = self.hidden_size
        return 4 * h * (self.input_size + h) + 3 * h


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=F32)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def matmul(a: np.ndarray, b: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """Matrix product with float64 accumulation, result stored float32."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    if counter is not None:
        counter.add_macs(a.shape[0] * a.shape[1] * b.shape[1])
    return (np.asarray(a, np.float64) @ np.asarray(b, np.float64)).astype(F32)


def matvec(m: np.ndarray, v: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """(rows, cols) @ (cols,) -> (rows,), float64 accumulation."""
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError(f"matvec dims differ: {m.shape} x {v.shape}")
    if counter is not None:
        counter.add_macs(m.shape[0] * m.shape[1])
    return (np.asarray(m, np.float64) @ np.asarray(v, np.float64)).astype(F32)


def softmax(v: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """Stable softmax of a 1-D vector (max subtraction, float64 sums)."""
    if v.ndim != 1 or v.shape[0] == 0:
        raise ShapeError(f"softmax needs a non-empty 1-D vector, got shape {v.shape}")
    z = v.astype(np.float64)
    e = np.exp(z - z.max())
    if counter is not None:
        counter.add_exps(v.shape[0])
    return (e / e.sum()).astype(F32)


def linear(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None = None,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """``x @ w + b`` for a 1-D input against an (in, out) weight matrix."""
    if x.ndim != 1 or w.ndim != 2 or x.shape[0] != w.shape[0]:
        raise ShapeError(f"linear dims differ: x {x.shape} vs w {w.shape}")
    if b is not None and b.shape != (w.shape[1],):
        raise ShapeError(f"linear bias shape {b.shape} vs {w.shape[1]} outputs")
    if counter is not None:
        counter.add_macs(x.shape[0] * w.shape[1])
    y = np.asarray(x, np.float64) @ np.asarray(w, np.float64)
    if b is not None:
        y = y + np.asarray(b, np.float64)
    return y.astype(F32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, F32(0.0))


def lstm_cell_step(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    w: LstmCellWeights,
    counter: MacCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM time step -> (h, c).

    Gates: i, f, o take sigmoids, candidate g takes tanh;
    c = f*c_prev + i*g and h = o*tanh(c).
    """
    h_size = w.hidden_size
    if x.shape != (w.input_size,):
        raise ShapeError(f"LSTM input {x.shape} vs expected ({w.input_size},)")
    if h_prev.shape != (h_size,) or c_prev.shape != (h_size,):
        raise ShapeError(f"LSTM state {h_prev.shape}/{c_prev.shape} vs hidden ({h_size},)")
    if counter is not None:
        counter.add_macs(w.step_macs)

    u = np.concatenate([np.asarray(x, np.float64), np.asarray(h_prev, np.float64)])
    z = w._stacked64 @ u + w._bias64
    sig = 1.0 / (1.0 + np.exp(-z))
    i = sig[0:h_size]
    f = sig[h_size : 2 * h_size]
    g = np.tanh(z[2 * h_size : 3 * h_size])
    o = sig[3 * h_size : 4 * h_size]
    c = f * np.asarray(c_prev, np.float64) + i * g
    h = o * np.tanh(c)
    return h.astype(F32), c.astype(F32)
