"""Attention heads, the frame loop, state suspend/resume, streaming memory."""

import tracemalloc

import numpy as np
import pytest

from specstream.decoder import (
    DecoderState,
    attend_head,
    attention_weights,
    combine_heads,
    decode_step,
    decode_stream,
    decode_to_array,
)
from specstream.encoder import SourceEncoding, encode_all, level_features
from specstream.errors import DecodeAborted, FormatError, ShapeError
from specstream.features import FRAME_DIM, CorpusSpec, synth_corpus, unroll_frames
from specstream.numerics import MacCounter


def _enc(rows, d_k=4, seed=0, level="word"):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(rows, d_k)).astype(np.float32)
    v = rng.normal(size=(rows, d_k)).astype(np.float32)
    return SourceEncoding(level, k, v, rows, 1)


class TestAttendHead:
    def test_single_row_returns_value(self):
        enc = _enc(1)
        ctx = attend_head(np.ones(4, np.float32), enc)
        assert np.allclose(ctx, enc.values[0], atol=1e-6)

    def test_zero_query_averages_values(self):
        enc = _enc(8)
        ctx = attend_head(np.zeros(4, np.float32), enc)
        assert np.allclose(ctx, enc.values.mean(axis=0), atol=1e-6)

    def test_weights_sum_to_one(self):
        enc = _enc(12)
        w = attention_weights(np.ones(4, np.float32), enc)
        assert w.shape == (12,)
        assert abs(float(w.sum()) - 1.0) < 1e-5

    def test_sharp_query_picks_matching_row(self):
        keys = np.eye(4, dtype=np.float32) * 10
        vals = np.diag(np.arange(1.0, 5.0)).astype(np.float32)
        enc = SourceEncoding("word", keys, vals, 4, 1)
        ctx, w = attend_head(np.array([0, 0, 10, 0], np.float32), enc, with_weights=True)
        assert w.argmax() == 2
        assert ctx[2] > 2.9

    def test_mac_and_exp_count(self):
        c = MacCounter()
        attend_head(np.zeros(4, np.float32), _enc(9), c)
        assert c.macs == 2 * 4 * 9
        assert c.exps == 9

    def test_query_width_guard(self):
        with pytest.raises(ShapeError):
            attend_head(np.zeros(3, np.float32), _enc(5))


class TestCombineHeads:
    def test_shapes_and_count(self):
        c = MacCounter()
        w = np.ones((9, 6), np.float32)
        out = combine_heads(np.ones(4, np.float32), np.ones(3, np.float32), np.ones(2, np.float32), w, c)
        assert out.shape == (6,)
        assert np.allclose(out, 9.0)
        assert c.macs == 9 * 6

    def test_width_guard(self):
        with pytest.raises(ShapeError):
            combine_heads(np.ones(4, np.float32), np.ones(3, np.float32), np.ones(2, np.float32), np.ones((8, 6), np.float32))


class TestDecodeStep:
    def test_emits_frame_and_advances(self, model, small_track, small_encodings):
        _, dec_w = model
        state = DecoderState.initial()
        y, state2 = decode_step(small_track.frames[0], state, small_encodings, dec_w)
        assert y.shape == (FRAME_DIM,) and y.dtype == np.float32
        assert state2.t == 1
        assert np.array_equal(state2.y_prev, y)
        assert state.t == 0  # input state untouched

    def test_per_frame_macs_constant(self, model, small_track, small_encodings):
        _, dec_w = model
        state = DecoderState.initial()
        per_frame = []
        for t in range(4):
            c = MacCounter()
            _, state = decode_step(small_track.frames[t], state, small_encodings, dec_w, c)
            per_frame.append((c.macs, c.exps))
        assert len(set(per_frame)) == 1

    def test_feedback_changes_second_frame(self, model, small_track, small_encodings):
        _, dec_w = model
        s0 = DecoderState.initial()
        y0, s1 = decode_step(small_track.frames[0], s0, small_encodings, dec_w)
        _, s1b = decode_step(small_track.frames[0], s0, small_encodings, dec_w)
        s1b.y_prev = np.float32(1.0) + s1b.y_prev
        y1 = decode_step(small_track.frames[1], s1, small_encodings, dec_w)[0]
        y1b = decode_step(small_track.frames[1], s1b, small_encodings, dec_w)[0]
        assert not np.array_equal(y1, y1b)

    def test_input_width_guard(self, model, small_encodings):
        _, dec_w = model
        with pytest.raises(ShapeError):
            decode_step(np.zeros(3, np.float32), DecoderState.initial(), small_encodings, dec_w)


class TestStateSerialization:
    def test_round_trip_bits(self):
        state = DecoderState.initial()
        state.h1[:] = np.random.default_rng(0).normal(size=256).astype(np.float32)
        state.t = 17
        back = DecoderState.from_bytes(state.to_bytes())
        for name in ("h1", "c1", "h2", "c2", "y_prev"):
            assert np.array_equal(getattr(back, name), getattr(state, name))
        assert back.t == 17

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            DecoderState.from_bytes(b"XXXX" + b"\0" * 32)

    def test_truncated(self):
        blob = DecoderState.initial().to_bytes()
        with pytest.raises(FormatError):
            DecoderState.from_bytes(blob[:-8])

    def test_resume_is_bit_exact(self, model, small_track, small_encodings):
        """Suspending mid-utterance and resuming must not change a single bit."""
        _, dec_w = model
        full = decode_to_array(small_track, small_encodings, dec_w)

        state = DecoderState.initial()
        for t in range(80):
            _, state = decode_step(small_track.frames[t], state, small_encodings, dec_w)
        resumed = DecoderState.from_bytes(state.to_bytes())
        tail = decode_to_array(small_track, small_encodings, dec_w, state=resumed)
        assert tail.shape == (small_track.n_frames - 80, FRAME_DIM)
        assert np.array_equal(tail, full[80:])


class TestDecodeStream:
    def test_sink_sees_every_frame_in_order(self, model, small_track, small_encodings):
        _, dec_w = model
        seen = []
        n = decode_stream(small_track, small_encodings, dec_w, lambda t, y: seen.append(t))
        assert n == small_track.n_frames
        assert seen == list(range(small_track.n_frames))

    def test_sink_error_aborts_with_count(self, model, small_track, small_encodings):
        _, dec_w = model

        def sink(t, y):
            if t == 10:
                raise OSError("disk full")

        with pytest.raises(DecodeAborted) as exc:
            decode_stream(small_track, small_encodings, dec_w, sink)
        assert exc.value.frames_emitted == 10
        assert isinstance(exc.value.__cause__, OSError)

    def test_matches_manual_loop(self, model, small_track, small_encodings):
        _, dec_w = model
        out = decode_to_array(small_track, small_encodings, dec_w)
        state = DecoderState.initial()
        for t in range(small_track.n_frames):
            y, state = decode_step(small_track.frames[t], state, small_encodings, dec_w)
            assert np.array_equal(out[t], y)

    def test_streaming_memory_is_flat(self, model, config):
        """Peak allocation during the loop must not scale with track length."""
        enc_w, dec_w = model

        def peak(frames):
            tree = synth_corpus(13, CorpusSpec(target_frames=frames))[0]
            track = unroll_frames(tree)
            encs = encode_all(level_features(tree), enc_w, config.l_max)
            sink = lambda t, y: None
            decode_stream(track, encs, dec_w, sink)  # warm caches
            tracemalloc.start()
            decode_stream(track, encs, dec_w, sink)
            _, peak_bytes = tracemalloc.get_traced_memory()
            tracemalloc.stop()
            return peak_bytes

        short, long = peak(100), peak(1000)
        # 10x the frames must not even double the loop's peak allocations.
        assert long < 2 * short + 65536
