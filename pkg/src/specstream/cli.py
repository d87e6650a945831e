"""Command-line entry point.

Subcommands: ``init-weights`` (seeded random parameters to a weight file),
``gen-corpus`` (synthetic context trees as JSON), ``synth`` (trees ->
spectrum frames, binary or CSV), ``validate`` (oracle agreement suite),
``bench`` (RTF/latency/MAC sweep with CSV+SVG report).

Exit codes: 0 ok, 1 check/benchmark failure, 2 usage or bad configuration,
3 I/O failure, 4 input format or integrity failure.
"""

from __future__ import annotations

import argparse
import struct
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import plain_recurrent_decode, self_attention_decode
from .benchmark import MODEL_CHOICES, emit_report, run_bench
from .decoder import decode_stream
from .encoder import encode_all, level_features
from .errors import (
    BenchError,
    ConfigError,
    DecodeAborted,
    FormatError,
    IntegrityError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .features import (
    FRAME_DIM,
    MFCC_DIM,
    PERIODICITY_DIM,
    ContextTree,
    CorpusSpec,
    context_tree_to_json,
    parse_context_tree,
    synth_corpus,
    unroll_frames,
)
from .validation import CHECK_NAMES, run_validation
from .weights import (
    ModelConfig,
    ModelWeights,
    build_multirate,
    build_plain,
    build_selfattn,
    weights_init,
    weights_load,
    weights_save,
)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4


def _family(model_name: str) -> str:
    return "multirate" if model_name.startswith("multirate") else model_name


def _parse_pair(text: str, flag: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"{flag} wants LO,HI — got {text!r}") from None
    return lo, hi


def _load_tree(path: str) -> ContextTree:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise OSError(f"{path}: {e}") from e
    try:
        return parse_context_tree(text)
    except (ParseError, ValidationError) as e:
        raise type(e)(f"{path}: {e}") from e


def _synth_to_file(tree: ContextTree, model_name: str, mw: ModelWeights,
                   l_max: int | None, out_path: Path, text: bool) -> int:
    track = unroll_frames(tree)
    family = _family(model_name)

    def run(sink):
        if family == "multirate":
            enc_w, dec_w = build_multirate(mw)
            encs = encode_all(level_features(tree), enc_w, l_max)
            decode_stream(track, encs, dec_w, sink)
        elif family == "lstm":
            plain_recurrent_decode(track, build_plain(mw), sink=sink)
        else:
            self_attention_decode(track, build_selfattn(mw), sink=sink)

    if text:
        cols = [f"mfcc{i}" for i in range(MFCC_DIM)] + ["f0"] + [f"period{i}" for i in range(PERIODICITY_DIM)]
        with open(out_path, "w") as f:
            f.write("t," + ",".join(cols) + "\n")
            run(lambda t, y: f.write(f"{t}," + ",".join(f"{v:.7g}" for v in y) + "\n"))
    else:
        with open(out_path, "wb") as f:
            f.write(struct.pack("<Q", track.n_frames))
            run(lambda t, y: f.write(np.asarray(y, dtype="<f4").tobytes()))
    return track.n_frames


def cmd_synth(args) -> int:
    mw = weights_load(args.weights)
    family = _family(args.model) if args.model else mw.config.model
    if args.model and _family(args.model) != mw.config.model:
        raise IntegrityError(
            f"weight file holds a {mw.config.model!r} model; cannot run {args.model!r}"
        )
    model_name = args.model or mw.config.model
    pooling = mw.config.pooling and not args.no_pooling and model_name != "multirate-nopool"
    l_max = None if not pooling else (args.lmax if args.lmax else mw.config.l_max)
    if family != "multirate":
        l_max = None

    out = Path(args.out)
    suffix = ".csv" if args.text else ".bin"
    if len(args.tree) > 1:
        out.mkdir(parents=True, exist_ok=True)
        outs = [out / (Path(p).stem + suffix) for p in args.tree]
    else:
        outs = [out]

    trees = [_load_tree(p) for p in args.tree]
    total = 0
    if args.jobs > 1 and len(trees) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_synth_to_file, tree, model_name, mw, l_max, path, args.text)
                for tree, path in zip(trees, outs)
            ]
            counts = [f.result() for f in futures]
    else:
        counts = [
            _synth_to_file(tree, model_name, mw, l_max, path, args.text)
            for tree, path in zip(trees, outs)
        ]
    for path, n in zip(outs, counts):
        print(f"{path}: {n} frames")
        total += n
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_validation(seed=args.seed, cases=args.cases, perturb=args.perturb)
    ok = True
    for r in results:
        print(r.line())
        ok = ok and r.passed
    return EXIT_OK if ok else EXIT_CHECK


def cmd_bench(args) -> int:
    models = args.models.split(",")
    lengths = []
    for part in args.lengths.split(","):
        try:
            lengths.append(float(part))
        except ValueError:
            raise ConfigError(f"--lengths wants comma-separated seconds, got {part!r}") from None
    records = run_bench(models, lengths, seed=args.seed, repeats=args.repeats, l_max=args.lmax)
    csv_path, svg_path = emit_report(records, args.out)
    for r in records:
        print(r.csv_row())
    print(f"report: {csv_path} {svg_path}")
    return EXIT_OK


def cmd_init_weights(args) -> int:
    pooling = not args.no_pooling and args.model != "multirate-nopool"
    cfg = ModelConfig(
        model=_family(args.model),
        l_max=args.lmax,
        feedback=not args.no_feedback,
        pooling=pooling,
    )
    w = weights_init(args.seed, cfg)
    weights_save(w, args.out)
    n_values = sum(t.size for t in w.tensors.values())
    print(f"{args.out}: {len(w.tensors)} tensors, {n_values} values, model={cfg.model}")
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    spec = CorpusSpec(
        sentences=args.sentences,
        target_frames=args.frames,
        words=_parse_pair(args.words, "--words"),
        duration_frames=_parse_pair(args.duration, "--duration"),
    )
    trees = synth_corpus(args.seed, spec)
    out = Path(args.out)
    if len(trees) > 1:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"tree{i:03d}.json" for i in range(len(trees))]
    else:
        paths = [out]
    for tree, path in zip(trees, paths):
        path.write_text(context_tree_to_json(tree))
        print(f"{path}: {tree.n_words} words, {tree.n_phones} phones, {tree.n_frames} frames")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specstream",
        description="Streaming spectrum-model inference: synthesis, validation, benchmarks.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("synth", help="decode context trees to spectrum frames")
    p.add_argument("tree", nargs="+", help="context tree JSON file(s)")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True, help="output file (or directory for several trees)")
    p.add_argument("--model", choices=MODEL_CHOICES, default=None,
                   help="default: the family stored in the weight file")
    p.add_argument("--lmax", type=int, default=0, help="override pooled length cap")
    p.add_argument("--no-pooling", action="store_true")
    p.add_argument("--text", action="store_true", help="CSV frames instead of binary")
    p.add_argument("--jobs", type=int, default=1, help="parallel sessions across input files")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("validate", help="fast kernels vs scalar-loop oracles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=200, help="random cases per kernel check")
    p.add_argument("--perturb", choices=CHECK_NAMES, default=None,
                   help="corrupt one check's fast output (self-test of the failure path)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("bench", help="RTF / first-frame latency / MAC sweep")
    p.add_argument("--models", default=",".join(MODEL_CHOICES))
    p.add_argument("--lengths", default="10,20,40,60", help="audio seconds, comma-separated")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lmax", type=int, default=50)
    p.add_argument("--out", default="bench_out", help="report directory")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("init-weights", help="write seeded random weights")
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=MODEL_CHOICES, default="multirate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lmax", type=int, default=50)
    p.add_argument("--no-feedback", action="store_true",
                   help="drop the previous output frame from the decoder input")
    p.add_argument("--no-pooling", action="store_true")
    p.set_defaults(fn=cmd_init_weights)

    p = sub.add_parser("gen-corpus", help="write synthetic context trees")
    p.add_argument("--out", required=True, help="output file (or directory for several sentences)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sentences", type=int, default=1)
    p.add_argument("--frames", type=int, default=None, help="exact frame count per sentence")
    p.add_argument("--words", default="8,40", help="word count range LO,HI")
    p.add_argument("--duration", default="3,30", help="phone duration range in frames LO,HI")
    p.set_defaults(fn=cmd_gen_corpus)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FormatError, IntegrityError, ShapeError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except BenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK
    except DecodeAborted as e:
        cause = e.__cause__
        print(f"error: stream aborted after {e.frames_emitted} frames: {cause}", file=sys.stderr)
        return EXIT_IO if isinstance(cause, OSError) else EXIT_CHECK
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
