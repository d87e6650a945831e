"""Randomized agreement checks between fast kernels and their oracles.

Each check draws seeded random cases, runs the production code and the
scalar-loop reference on identical inputs, and aggregates the worst
elementwise error into one report. ``perturb`` lets the caller corrupt a
named check's fast output on purpose — that is how the failure path of the
``validate`` command is exercised without shipping a broken kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import attend_head, combine_heads, decode_to_array
from .encoder import SourceEncoding, conv1d_same, dynamic_max_pool, encode_all, level_features
from .errors import ValidationError
from .features import CorpusSpec, synth_corpus, unroll_frames
from .numerics import F32, LstmCellWeights, lstm_cell_step
from .oracle import (
    OracleReport,
    compare,
    oracle_attention,
    oracle_batch_decode,
    oracle_combine,
    oracle_conv1d,
    oracle_lstm_cell,
    oracle_maxpool,
)
from .rng import SplitMix64
from .weights import ModelConfig, build_multirate, weights_init

KERNEL_TOL = 1e-5
DECODE_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    report: OracleReport
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name}: compared={self.report.compared} "
            f"max_abs={self.report.max_abs_err:.3e} max_rel={self.report.max_rel_err:.3e} "
            f"(tol {self.tol:g})"
        )


class _Agg:
    """Worst-case error accumulator across a check's random cases."""

    def __init__(self):
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.compared = 0

    def add(self, got, want, floor):
        rep = compare(got, want, floor=floor)
        self.max_abs = max(self.max_abs, rep.max_abs_err)
        self.max_rel = max(self.max_rel, rep.max_rel_err)
        self.compared += rep.compared

    def result(self, name, tol) -> CheckResult:
        rep = OracleReport(max_abs_err=self.max_abs, max_rel_err=self.max_rel, compared=self.compared)
        return CheckResult(name=name, report=rep, tol=tol, passed=rep.max_rel_err <= tol)


def _poison(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flat[0] += F32(0.05)
    return out


def check_conv1d(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    for i in range(cases):
        rng = SplitMix64(seed, f"val/conv/{i}")
        length = 1 + int(rng.int_range(0, 63)[0])
        d_in = 1 + int(rng.int_range(0, 23)[0])
        d_out = 1 + int(rng.int_range(0, 23)[0])
        k = int(rng.int_range(0, 2)[0]) * 2 + 1
        x = rng.normal(length * d_in).reshape(length, d_in)
        filt = (rng.normal(d_out * d_in * k) * F32(0.5)).reshape(d_out, d_in, k)
        bias = rng.normal(d_out)
        got = conv1d_same(x, filt, bias)
        if perturb:
            got = _poison(got)
        agg.add(got, oracle_conv1d(x, filt, bias), floor=1e-3)
    return agg.result("conv1d_same", KERNEL_TOL)


def check_maxpool(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    targets = (1, 2, 7, 50, 400)
    for i in range(cases):
        rng = SplitMix64(seed, f"val/pool/{i}")
        length = 1 + int(rng.int_range(0, 399)[0])
        d = 1 + int(rng.int_range(0, 7)[0])
        l_max = targets[int(rng.int_range(0, len(targets) - 1)[0])]
        x = rng.normal(length * d).reshape(length, d)
        got, got_stride = dynamic_max_pool(x, l_max)
        want, want_stride = oracle_maxpool(x, l_max)
        if got_stride != want_stride:
            raise ValidationError(f"pool stride mismatch: {got_stride} vs {want_stride}")
        if perturb:
            got = _poison(got)
        agg.add(got, want, floor=1e-3)
    return agg.result("dynamic_max_pool", 0.0)


def check_attend(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    for i in range(cases):
        rng = SplitMix64(seed, f"val/attend/{i}")
        rows = 1 + int(rng.int_range(0, 63)[0])
        d_k = 1 + int(rng.int_range(0, 47)[0])
        keys = rng.normal(rows * d_k).reshape(rows, d_k)
        values = rng.normal(rows * d_k).reshape(rows, d_k)
        q = rng.normal(d_k)
        enc = SourceEncoding(level="word", keys=keys, values=values, pooled_len=rows, stride=1)
        got = attend_head(q, enc)
        if perturb:
            got = _poison(got)
        agg.add(got, oracle_attention(q, keys, values), floor=1e-3)
    return agg.result("attend_head", KERNEL_TOL)


def check_combine(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    for i in range(cases):
        rng = SplitMix64(seed, f"val/combine/{i}")
        dims = [1 + int(rng.int_range(0, 47)[0]) for _ in range(3)]
        d_model = 1 + int(rng.int_range(0, 127)[0])
        c_w, c_s, c_p = (rng.normal(d) for d in dims)
        w = rng.normal(sum(dims) * d_model).reshape(sum(dims), d_model)
        got = combine_heads(c_w, c_s, c_p, w)
        if perturb:
            got = _poison(got)
        agg.add(got, oracle_combine(c_w, c_s, c_p, w), floor=1e-3)
    return agg.result("combine_heads", KERNEL_TOL)


def check_lstm_cell(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    for i in range(cases):
        rng = SplitMix64(seed, f"val/cell/{i}")
        d_in = 1 + int(rng.int_range(0, 63)[0])
        hidden = 1 + int(rng.int_range(0, 95)[0])
        w = LstmCellWeights(
            w_x=(rng.normal(4 * hidden * d_in) * F32(0.3)).reshape(4 * hidden, d_in),
            w_h=(rng.normal(4 * hidden * hidden) * F32(0.3)).reshape(4 * hidden, hidden),
            bias=rng.normal(4 * hidden),
        )
        x = rng.normal(d_in)
        h_prev = rng.normal(hidden)
        c_prev = rng.normal(hidden)
        h_got, c_got = lstm_cell_step(x, h_prev, c_prev, w)
        if perturb:
            h_got = _poison(h_got)
        h_want, c_want = oracle_lstm_cell(x, h_prev, c_prev, w.w_x, w.w_h, w.bias)
        agg.add(h_got, h_want, floor=1e-3)
        agg.add(c_got, c_want, floor=1e-3)
    return agg.result("lstm_cell_step", KERNEL_TOL)


def check_batch_decode(seed: int, cases: int, perturb: bool = False) -> CheckResult:
    agg = _Agg()
    for i in range(cases):
        rng = SplitMix64(seed, f"val/decode/{i}")
        frames = 40 + int(rng.int_range(0, 120)[0])
        cfg = ModelConfig()
        mw = weights_init(int(rng.u64(1)[0] >> 33), cfg)
        enc_w, dec_w = build_multirate(mw)
        tree = synth_corpus(seed * 1000 + i, CorpusSpec(target_frames=frames))[0]
        track = unroll_frames(tree)
        encs = encode_all(level_features(tree), enc_w, cfg.l_max)
        got = decode_to_array(track, encs, dec_w)
        if perturb:
            got = _poison(got)
        agg.add(got, oracle_batch_decode(track, encs, dec_w), floor=1e-2)
    return agg.result("decode_stream", DECODE_TOL)


_CHECKS = (
    ("conv1d_same", check_conv1d),
    ("dynamic_max_pool", check_maxpool),
    ("attend_head", check_attend),
    ("combine_heads", check_combine),
    ("lstm_cell_step", check_lstm_cell),
    ("decode_stream", check_batch_decode),
)

CHECK_NAMES = tuple(name for name, _ in _CHECKS)


def run_validation(seed: int = 0, cases: int = 200, perturb: str | None = None) -> list[CheckResult]:
    """Run every check; ``perturb`` names one whose fast output gets corrupted."""
    if cases < 1:
        raise ValidationError(f"need at least one case per check, got {cases}")
    if perturb is not None and perturb not in CHECK_NAMES:
        raise ValidationError(f"unknown check {perturb!r}; choose from {CHECK_NAMES}")
    results = []
    for name, fn in _CHECKS:
        n = max(1, cases // 20) if name == "decode_stream" else cases
        results.append(fn(seed, n, perturb == name))
    return results
