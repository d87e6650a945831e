"""Acceptance gate: the eight headline properties, one test each.

Run with ``pytest -v tests/test_acceptance.py`` for a pass/fail line per
criterion; each test also prints its measured numbers (visible with -rP).
Stated runtime budgets are asserted inside the tests that carry them.
"""

import math
import time

import numpy as np
import pytest

from specstream.baselines import self_attention_encode
from specstream.benchmark import CSV_HEADER, MODEL_CHOICES, bench_corpus, emit_report, run_bench
from specstream.decoder import DecoderState, attend_head, decode_step, decode_to_array
from specstream.encoder import dynamic_max_pool, encode_all, level_features
from specstream.features import CorpusSpec, synth_corpus, unroll_frames
from specstream.numerics import MacCounter
from specstream.oracle import compare, oracle_batch_decode, oracle_maxpool
from specstream.rng import SplitMix64
from specstream.validation import (
    KERNEL_TOL,
    check_attend,
    check_combine,
    check_conv1d,
    check_lstm_cell,
)
from specstream.weights import ModelConfig, build_multirate, build_selfattn, weights_init

DECODE_REL_TOL = 1e-4


def _uniform_tree(n_phones: int, seed: int = 3, durations=(1, 2)):
    """One phone per syllable per word: every level has n_phones rows."""
    spec = CorpusSpec(
        words=(n_phones, n_phones),
        words_per_phrase=(2, 6),
        syllables_per_word=(1, 1),
        phones_per_syllable=(1, 1),
        duration_frames=durations,
    )
    return synth_corpus(seed, spec)[0]


def test_criterion_1_streaming_equivalence():
    """Streamed decode equals the batch oracle on 100 seeded pairs."""
    t0 = time.perf_counter()
    cfg = ModelConfig()
    picker = SplitMix64(2024, "acceptance/lengths")
    worst = 0.0
    total_frames = 0
    for i in range(100):
        frames = int(picker.int_range(80, 1600)[0])
        tree = synth_corpus(i, CorpusSpec(target_frames=frames))[0]
        track = unroll_frames(tree)
        enc_w, dec_w = build_multirate(weights_init(i, cfg))
        encs = encode_all(level_features(tree), enc_w, cfg.l_max)
        got = decode_to_array(track, encs, dec_w)
        want = oracle_batch_decode(track, encs, dec_w)
        report = compare(got, want, floor=1e-2)
        assert report.within(DECODE_REL_TOL), f"pair {i}: {report}"
        worst = max(worst, report.max_rel_err)
        total_frames += frames
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, f"took {elapsed:.1f}s, budget is 120s"
    print(
        f"[criterion 1] PASS — 100 pairs, {total_frames} frames, "
        f"worst rel err {worst:.3e} (tol {DECODE_REL_TOL:g}), {elapsed:.1f}s"
    )


def test_criterion_2_constant_per_frame_cost():
    """Pooled per-frame MACs are length-invariant; unpooled attention is linear."""
    cfg = ModelConfig()
    enc_w, dec_w = build_multirate(weights_init(0, cfg))

    # Pooling on: identical integer per-frame cost at 200 / 1000 / 5000 phones.
    per_frame = {}
    for n_phones in (200, 1000, 5000):
        tree = _uniform_tree(n_phones)
        track = unroll_frames(tree)
        encs = encode_all(level_features(tree), enc_w, cfg.l_max)
        c = MacCounter()
        decode_to_array(track, encs, dec_w, counter=c)
        frames_cost, rem = divmod(c.macs, track.n_frames)
        assert rem == 0
        per_frame[n_phones] = frames_cost
    assert len(set(per_frame.values())) == 1, per_frame

    # Pooling off: per-frame attention MACs are linear in the summed
    # encoding lengths (slope > 0, R^2 > 0.999).
    sums, attn = [], []
    for n_phones in (100, 300, 900, 2700):
        tree = _uniform_tree(n_phones)
        encs = encode_all(level_features(tree), enc_w, None)
        c = MacCounter()
        for enc in encs:
            attend_head(np.zeros(enc.d_k, np.float32), enc, c)
        sums.append(sum(enc.pooled_len for enc in encs))
        attn.append(c.macs)
    design = np.array([[s, 1.0] for s in sums])
    y = np.array(attn, np.float64)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    r2 = 1.0 - float(((y - fitted) ** 2).sum()) / float(((y - y.mean()) ** 2).sum())
    assert coef[0] > 0
    assert r2 > 0.999
    print(
        f"[criterion 2] PASS — pooled per-frame MACs {set(per_frame.values()).pop()} at "
        f"L_p∈{{200,1000,5000}}; unpooled attention slope {coef[0]:.1f} MACs/row, R²={r2:.6f}"
    )


def test_criterion_3_rtf_curve_shapes():
    """Wall-clock RTF: flat for pooled multirate and plain LSTM, growing otherwise."""
    t0 = time.perf_counter()
    lengths = [10.0, 20.0, 40.0, 60.0]
    records = run_bench(list(MODEL_CHOICES), lengths, seed=0, repeats=7)
    elapsed = time.perf_counter() - t0

    rtf = {(r.model, r.audio_s): r.rtf for r in records}
    series = {m: [rtf[(m, s)] for s in lengths] for m in MODEL_CHOICES}

    flat = max(series["multirate"]) / min(series["multirate"])
    assert flat <= 1.2, f"multirate RTF ratio {flat:.3f}"

    assert series["multirate-nopool"][-1] > series["multirate-nopool"][0], series["multirate-nopool"]

    sa = series["selfattn"]
    assert all(a < b for a, b in zip(sa, sa[1:])), f"selfattn not increasing: {sa}"

    plain = series["lstm"]
    plain_flat = max(plain) / min(plain)
    assert plain_flat <= 1.2, f"plain RTF ratio {plain_flat:.3f}"
    for s in lengths:
        others = [rtf[(m, s)] for m in MODEL_CHOICES if m != "lstm"]
        assert rtf[("lstm", s)] < min(others), f"plain not lowest at {s}s"
        assert rtf[("multirate", s)] <= 2.0 * rtf[("lstm", s)], f"multirate > 2x plain at {s}s"

    assert elapsed < 600.0, f"took {elapsed:.1f}s, budget is 600s"
    print(
        f"[criterion 3] PASS — multirate ratio {flat:.3f}, plain ratio {plain_flat:.3f}, "
        f"selfattn {sa[0]:.4f}->{sa[-1]:.4f}, nopool {series['multirate-nopool'][0]:.4f}->"
        f"{series['multirate-nopool'][-1]:.4f}, {elapsed:.0f}s"
    )


def test_criterion_4_quadratic_attention_accounting():
    """Doubling the frame count quadruples encoder attention MACs (±0.1)."""
    w = build_selfattn(weights_init(0, ModelConfig(model="selfattn")))
    macs = {}
    for frames in (800, 1600):
        _, track = bench_corpus(1, frames / 80.0)
        assert track.n_frames == frames
        ac = MacCounter()
        self_attention_encode(track.frames, w, attn_counter=ac)
        macs[frames] = ac.macs
    ratio = macs[1600] / macs[800]
    assert abs(ratio - 4.0) <= 0.1, ratio
    print(f"[criterion 4] PASS — attention MACs {macs[800]} -> {macs[1600]}, ratio {ratio:.4f}")


def test_criterion_5_pooling_property_grid():
    """Pooled length, stride, and window maxima across the full (L, l_max) grid."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    cases = 0
    for l_max in (1, 2, 50, 500):
        for length in range(1, 501):
            x = rng.normal(size=(length, 3)).astype(np.float32)
            pooled, stride = dynamic_max_pool(x, l_max)
            assert pooled.shape[0] == min(length, l_max)
            assert stride == math.ceil(length / l_max)
            ref, ref_stride = oracle_maxpool(x, l_max)
            assert stride == ref_stride
            assert np.array_equal(pooled, ref.astype(np.float32))
            cases += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"took {elapsed:.1f}s, budget is 30s"
    print(f"[criterion 5] PASS — {cases} (L, l_max) cases, exact agreement, {elapsed:.1f}s")


def test_criterion_6_kernel_oracles():
    """Each fast kernel agrees with its scalar-loop oracle on 1000 cases."""
    results = [
        check_conv1d(seed=0, cases=1000),
        check_attend(seed=0, cases=1000),
        check_combine(seed=0, cases=1000),
        check_lstm_cell(seed=0, cases=1000),
    ]
    for r in results:
        assert r.tol == KERNEL_TOL == 1e-5
        assert r.passed, r.line()
    worst = max(r.report.max_rel_err for r in results)
    print(
        "[criterion 6] PASS — "
        + "; ".join(f"{r.name} max_rel {r.report.max_rel_err:.2e}" for r in results)
        + f" (tol {KERNEL_TOL:g}, worst {worst:.2e})"
    )


def test_criterion_7_determinism_and_formats(tmp_path):
    """Byte-exact weight round-trip, reproducible synth, contract CSV."""
    from specstream.cli import EXIT_OK, main
    from specstream.weights import weights_load, weights_save

    # Weight file round-trip.
    mw = weights_init(11, ModelConfig())
    p1, p2 = tmp_path / "w1", tmp_path / "w2"
    weights_save(mw, p1)
    weights_save(weights_load(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()

    # Same seed, twice through the whole CLI: identical output bytes.
    tree = tmp_path / "tree.json"
    assert main(["gen-corpus", "--out", str(tree), "--seed", "4", "--frames", "120"]) == EXIT_OK
    outs = []
    for name in ("s1.bin", "s2.bin"):
        out = tmp_path / name
        wfile = tmp_path / ("w_" + name)
        assert main(["init-weights", "--out", str(wfile), "--seed", "21"]) == EXIT_OK
        assert main(["synth", str(tree), "--weights", str(wfile), "--out", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) == 8 + 120 * 76

    # Bench CSV: contract header, one row per (model, length).
    records = run_bench(["multirate", "lstm"], [1.0, 2.0], seed=0, repeats=3)
    csv_path, _ = emit_report(records, tmp_path / "report")
    lines = open(csv_path).read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 4
    for line in lines[1:]:
        assert len(line.split(",")) == len(CSV_HEADER.split(","))
    print(
        "[criterion 7] PASS — weight round-trip byte-exact, "
        f"synth reproducible ({len(outs[0])} bytes), CSV header + 4 rows"
    )


def test_criterion_8_resume_bit_exact():
    """A decode resumed from serialized state matches the uninterrupted run."""
    cfg = ModelConfig()
    enc_w, dec_w = build_multirate(weights_init(5, cfg))
    tree = synth_corpus(31, CorpusSpec(target_frames=300))[0]
    track = unroll_frames(tree)
    encs = encode_all(level_features(tree), enc_w, cfg.l_max)

    full = decode_to_array(track, encs, dec_w)

    state = DecoderState.initial()
    for t in range(100):
        _, state = decode_step(track.frames[t], state, encs, dec_w)
    blob = state.to_bytes()

    resumed = DecoderState.from_bytes(blob)
    tail = decode_to_array(track, encs, dec_w, state=resumed)
    assert tail.shape == (200, full.shape[1])
    assert np.array_equal(tail, full[100:])
    print("[criterion 8] PASS — resumed frames 100..300 bit-identical to the full run")
