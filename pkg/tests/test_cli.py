"""End-to-end command-line behavior, in-process via main(argv)."""

import json
import struct

import numpy as np
import pytest

from specstream.cli import EXIT_CHECK, EXIT_FORMAT, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from specstream.features import FRAME_DIM
from specstream.validation import CHECK_NAMES


@pytest.fixture(scope="module")
def weights_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("w") / "multirate.weights"
    assert main(["init-weights", "--out", str(path), "--seed", "0"]) == EXIT_OK
    return path


@pytest.fixture(scope="module")
def tree_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("c") / "tree.json"
    assert main(["gen-corpus", "--out", str(path), "--seed", "5", "--frames", "160"]) == EXIT_OK
    return path


class TestGenCorpus:
    def test_exact_frame_count(self, tree_path):
        doc = json.loads(tree_path.read_text())
        assert sum(doc["durations"]) == 160

    def test_multiple_sentences_make_a_directory(self, tmp_path):
        out = tmp_path / "corpus"
        assert main(["gen-corpus", "--out", str(out), "--sentences", "3", "--seed", "1"]) == EXIT_OK
        files = sorted(p.name for p in out.iterdir())
        assert files == ["tree000.json", "tree001.json", "tree002.json"]

    def test_bad_range_pair_is_usage_error(self, tmp_path):
        code = main(["gen-corpus", "--out", str(tmp_path / "x.json"), "--words", "five,ten"])
        assert code == EXIT_USAGE


class TestSynth:
    def test_binary_layout(self, weights_path, tree_path, tmp_path):
        out = tmp_path / "frames.bin"
        assert main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(out)]) == EXIT_OK
        blob = out.read_bytes()
        (n,) = struct.unpack("<Q", blob[:8])
        assert n == 160
        assert len(blob) == 8 + n * 4 * FRAME_DIM

    def test_five_frame_file_is_388_bytes(self, weights_path, tmp_path):
        tree = tmp_path / "five.json"
        assert main(["gen-corpus", "--out", str(tree), "--seed", "2", "--frames", "5"]) == EXIT_OK
        out = tmp_path / "five.bin"
        assert main(["synth", str(tree), "--weights", str(weights_path), "--out", str(out)]) == EXIT_OK
        assert out.stat().st_size == 8 + 5 * 4 * FRAME_DIM == 388

    def test_deterministic(self, weights_path, tree_path, tmp_path):
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(a)])
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_matches_library_decode(self, weights_path, tree_path, tmp_path):
        from specstream.decoder import decode_to_array
        from specstream.encoder import encode_all, level_features
        from specstream.features import parse_context_tree, unroll_frames
        from specstream.weights import build_multirate, weights_load

        out = tmp_path / "frames.bin"
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(out)])
        got = np.frombuffer(out.read_bytes()[8:], dtype="<f4").reshape(-1, FRAME_DIM)

        mw = weights_load(weights_path)
        tree = parse_context_tree(tree_path.read_text())
        enc_w, dec_w = build_multirate(mw)
        encs = encode_all(level_features(tree), enc_w, mw.config.l_max)
        want = decode_to_array(unroll_frames(tree), encs, dec_w)
        assert np.array_equal(got, want)

    def test_text_output(self, weights_path, tree_path, tmp_path):
        out = tmp_path / "frames.csv"
        code = main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(out), "--text"])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "t," + ",".join(
            [f"mfcc{i}" for i in range(13)] + ["f0"] + [f"period{i}" for i in range(5)]
        )
        assert len(lines) == 161
        first = lines[1].split(",")
        assert first[0] == "0" and len(first) == 20
        float(first[1])  # numeric payload

    def test_multiple_trees_and_jobs(self, weights_path, tmp_path):
        trees = []
        for i, frames in enumerate((40, 60)):
            p = tmp_path / f"t{i}.json"
            main(["gen-corpus", "--out", str(p), "--seed", str(10 + i), "--frames", str(frames)])
            trees.append(str(p))
        serial, threaded = tmp_path / "serial", tmp_path / "threaded"
        base = ["synth", *trees, "--weights", str(weights_path)]
        assert main(base + ["--out", str(serial)]) == EXIT_OK
        assert main(base + ["--out", str(threaded), "--jobs", "2"]) == EXIT_OK
        for name in ("t0.bin", "t1.bin"):
            assert (serial / name).read_bytes() == (threaded / name).read_bytes()

    def test_model_mismatch_is_integrity_error(self, tree_path, tmp_path):
        lstm_w = tmp_path / "plain.weights"
        main(["init-weights", "--out", str(lstm_w), "--model", "lstm"])
        code = main(["synth", str(tree_path), "--weights", str(lstm_w), "--out", str(tmp_path / "x.bin"), "--model", "multirate"])
        assert code == EXIT_FORMAT

    def test_lmax_override(self, weights_path, tree_path, tmp_path):
        small, dflt = tmp_path / "small.bin", tmp_path / "dflt.bin"
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(dflt)])
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(small), "--lmax", "2"])
        assert small.read_bytes() != dflt.read_bytes()

    def test_no_pooling_equals_nopool_model(self, weights_path, tree_path, tmp_path):
        a, b = tmp_path / "flag.bin", tmp_path / "model.bin"
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(a), "--no-pooling"])
        main(["synth", str(tree_path), "--weights", str(weights_path), "--out", str(b), "--model", "multirate-nopool"])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_tree_is_io_error(self, weights_path, tmp_path):
        code = main(["synth", str(tmp_path / "ghost.json"), "--weights", str(weights_path), "--out", str(tmp_path / "x.bin")])
        assert code == EXIT_IO

    def test_corrupt_tree_is_format_error(self, weights_path, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"sentence\": [0.0]}")
        code = main(["synth", str(bad), "--weights", str(weights_path), "--out", str(tmp_path / "x.bin")])
        assert code == EXIT_FORMAT

    def test_corrupt_weights_is_format_error(self, tree_path, tmp_path):
        bad = tmp_path / "bad.weights"
        bad.write_bytes(b"SMW1" + b"\xff" * 64)
        code = main(["synth", str(tree_path), "--weights", str(bad), "--out", str(tmp_path / "x.bin")])
        assert code == EXIT_FORMAT


class TestValidate:
    def test_prints_one_line_per_check(self, capsys):
        assert main(["validate", "--cases", "8"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == len(CHECK_NAMES)
        assert all(line.startswith("PASS") for line in lines)

    def test_perturbed_run_fails(self, capsys):
        assert main(["validate", "--cases", "8", "--perturb", "attend_head"]) == EXIT_CHECK
        out = capsys.readouterr().out
        assert "FAIL  attend_head" in out

    def test_unknown_check_rejected_by_parser(self):
        with pytest.raises(SystemExit) as exc:
            main(["validate", "--perturb", "nonsense"])
        assert exc.value.code == 2


class TestBench:
    def test_tiny_sweep_writes_report(self, tmp_path, capsys):
        out = tmp_path / "report"
        code = main(["bench", "--models", "lstm", "--lengths", "1,2", "--out", str(out)])
        assert code == EXIT_OK
        printed = capsys.readouterr().out.strip().splitlines()
        assert len(printed) == 3  # 2 records + report path line
        csv_lines = (out / "rtf.csv").read_text().splitlines()
        assert csv_lines[0] == "model,audio_s,synth_s,rtf,first_frame_ms,per_frame_macs,encoder_macs,repeats"
        assert len(csv_lines) == 3
        assert (out / "rtf.svg").exists()

    def test_bad_lengths_is_usage_error(self, tmp_path):
        assert main(["bench", "--models", "lstm", "--lengths", "ten", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unknown_model_is_check_error(self, tmp_path):
        assert main(["bench", "--models", "bogus", "--lengths", "1", "--out", str(tmp_path)]) == EXIT_CHECK


class TestParser:
    def test_no_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["validate", "--frobnicate"])
        assert exc.value.code == 2
