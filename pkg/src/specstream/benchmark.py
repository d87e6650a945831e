"""Wall-clock and MAC benchmark across the four model variants.

The interesting quantity is the real-time factor, synthesis seconds divided
by audio seconds: a streaming synthesizer is only viable if RTF stays flat
as utterances get longer. The harness times full cold-start synthesis
(encoder plus every frame, output discarded) on one thread, takes medians
over repeats, and gathers MAC counts in a separate instrumented pass so
counting never pollutes the timings. A pid lockfile refuses concurrent runs
on the same machine, since two benchmarks sharing a core would time each
other.

Timed passes are not allocation-free — every vector op makes small
constant-size temporaries — and CPython offers no cheap per-frame
allocation hook that wouldn't distort the timing, so constant-memory
streaming is asserted separately (see the peak-memory test) rather than
inside the timed loop.
"""

from __future__ import annotations

import os
import statistics
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass

from threadpoolctl import threadpool_limits

from .baselines import plain_recurrent_decode, self_attention_decode, self_attention_encode
from .decoder import decode_stream
from .encoder import encode_all, level_features
from .errors import BenchError, DecodeAborted
from .features import FRAMES_PER_SECOND, ContextTree, CorpusSpec, FrameFeatureTrack, synth_corpus, unroll_frames
from .numerics import MacCounter
from .weights import ModelConfig, build_multirate, build_plain, build_selfattn, weights_init

CSV_HEADER = "model,audio_s,synth_s,rtf,first_frame_ms,per_frame_macs,encoder_macs,repeats"
MODEL_CHOICES = ("multirate", "multirate-nopool", "lstm", "selfattn")

# Phone durations for benchmark corpora: mean ~6.5 frames (~12 phones/s), so
# an utterance's phone count scales realistically with its audio length.
_BENCH_DURATIONS = (3, 10)


@dataclass
class BenchRecord:
    model: str
    audio_s: float
    synth_s: float
    rtf: float
    first_frame_ms: float
    per_frame_macs: int
    encoder_macs: int
    repeats: int

    def csv_row(self) -> str:
        return (
            f"{self.model},{self.audio_s:g},{self.synth_s:.6f},{self.rtf:.6f},"
            f"{self.first_frame_ms:.3f},{self.per_frame_macs},{self.encoder_macs},{self.repeats}"
        )


class _Stop(Exception):
    """Raised by a sink to abort synthesis after the first frame."""


def _null_sink(t, y):
    pass


class ModelRunner:
    """One benchmarkable model: seeded weights plus a cold-start synth call."""

    def __init__(self, name: str, seed: int, l_max: int = 50):
        if name not in MODEL_CHOICES:
            raise BenchError(f"unknown model {name!r}; choose from {MODEL_CHOICES}")
        self.name = name
        self.l_max = l_max
        if name.startswith("multirate"):
            cfg = ModelConfig(model="multirate", l_max=l_max, pooling=(name == "multirate"))
            self._weights = weights_init(seed, cfg)
            self._enc_w, self._dec_w = build_multirate(self._weights)
        elif name == "lstm":
            self._weights = weights_init(seed, ModelConfig(model="lstm"))
            self._plain = build_plain(self._weights)
        else:
            self._weights = weights_init(seed, ModelConfig(model="selfattn"))
            self._sa = build_selfattn(self._weights)

    def synth(self, tree: ContextTree, track: FrameFeatureTrack, sink=_null_sink,
              counter: MacCounter | None = None, attn_counter: MacCounter | None = None) -> None:
        """Encoder pass plus every frame, from cold state, frames to ``sink``."""
        if self.name.startswith("multirate"):
            l_max = self.l_max if self.name == "multirate" else None
            encs = encode_all(level_features(tree), self._enc_w, l_max, counter)
            decode_stream(track, encs, self._dec_w, sink, counter=counter)
        elif self.name == "lstm":
            plain_recurrent_decode(track, self._plain, counter, sink=sink)
        else:
            self_attention_decode(track, self._sa, counter, attn_counter, sink=sink)

    def encoder_macs(self, tree: ContextTree, track: FrameFeatureTrack) -> int:
        c = MacCounter()
        if self.name.startswith("multirate"):
            l_max = self.l_max if self.name == "multirate" else None
            encode_all(level_features(tree), self._enc_w, l_max, c)
        elif self.name == "selfattn":
            self_attention_encode(track.frames, self._sa, c)
        return c.macs

    def mac_profile(self, tree: ContextTree, track: FrameFeatureTrack) -> tuple[int, int]:
        """(per-frame decode MACs, total encoder MACs), exact integers."""
        total = MacCounter()
        self.synth(tree, track, counter=total)
        enc = self.encoder_macs(tree, track)
        decode_total = total.macs - enc
        per_frame, rem = divmod(decode_total, track.n_frames)
        if rem:
            raise BenchError(f"{self.name}: decode MACs {decode_total} not divisible by {track.n_frames} frames")
        return per_frame, enc


def bench_corpus(seed: int, seconds: float, spec_dims: CorpusSpec | None = None) -> tuple[ContextTree, FrameFeatureTrack]:
    """A synthetic utterance padded/trimmed to exactly ``seconds`` of audio."""
    frames = int(round(seconds * FRAMES_PER_SECOND))
    spec = CorpusSpec(target_frames=frames, duration_frames=_BENCH_DURATIONS)
    tree = synth_corpus(seed, spec)[0]
    return tree, unroll_frames(tree)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


@contextmanager
def _bench_lock():
    path = os.path.join(tempfile.gettempdir(), "specstream-bench.lock")
    if os.path.exists(path):
        try:
            with open(path) as f:
                pid = int(f.read().strip())
        except (OSError, ValueError):
            pid = None
        if pid is not None and _pid_alive(pid):
            raise BenchError(f"another benchmark is running (pid {pid}, lock {path})")
    with open(path, "w") as f:
        f.write(str(os.getpid()))
    try:
        yield
    finally:
        try:
            os.remove(path)
        except OSError:
            pass


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def first_frame_latency(runner: ModelRunner, tree: ContextTree, track: FrameFeatureTrack,
                        repeats: int = 3) -> float:
    """Milliseconds from cold start to the first emitted frame (median)."""

    def sink(t, y):
        raise _Stop()

    def once():
        try:
            runner.synth(tree, track, sink)
        except (_Stop, DecodeAborted):
            return
        raise BenchError("synthesis produced no frames")

    once()  # warm-up
    return _median_time(once, repeats) * 1000.0


def run_bench(models: list[str], lengths: list[float], seed: int,
              repeats: int = 3, l_max: int = 50) -> list[BenchRecord]:
    """Time every (model, length) pair on one thread; medians over repeats."""
    if not models:
        raise BenchError("no models selected")
    if not lengths:
        raise BenchError("no lengths selected")
    for s in lengths:
        if s < 1.0:
            raise BenchError(f"audio length {s} s is below the 1 s minimum")
    if repeats < 3:
        raise BenchError(f"need >= 3 repeats for a median, got {repeats}")

    resolution = time.get_clock_info("perf_counter").resolution
    records = []
    with _bench_lock(), threadpool_limits(limits=1):
        runners = [ModelRunner(name, seed, l_max) for name in models]
        points = [(runner, tree, track)
                  for tree, track in (bench_corpus(seed, s) for s in lengths)
                  for runner in runners]
        for runner, tree, track in points:
            runner.synth(tree, track)  # warm-up, excluded
        # Host speed drifts on a scale of seconds; timing one point's repeats
        # back-to-back would bake whatever window it landed in into its
        # median. Interleaving rounds spreads every point's repeats over the
        # same wall-clock span, so the medians stay comparable.
        timings: list[list[float]] = [[] for _ in points]
        for _ in range(repeats):
            for i, (runner, tree, track) in enumerate(points):
                t0 = time.perf_counter()
                runner.synth(tree, track)
                timings[i].append(time.perf_counter() - t0)
        for (runner, tree, track), times in zip(points, timings):
            synth_s = statistics.median(times)
            used = repeats
            if synth_s < 100 * resolution:
                used = repeats * 10
                synth_s = _median_time(lambda: runner.synth(tree, track), used)
                if synth_s < 100 * resolution:
                    raise BenchError(
                        f"timer resolution {resolution:g}s cannot resolve "
                        f"{runner.name} at {track.n_frames / FRAMES_PER_SECOND:g} s"
                    )
            per_frame, enc_macs = runner.mac_profile(tree, track)
            audio_s = track.n_frames / FRAMES_PER_SECOND
            records.append(
                BenchRecord(
                    model=runner.name,
                    audio_s=audio_s,
                    synth_s=synth_s,
                    rtf=synth_s / audio_s,
                    first_frame_ms=first_frame_latency(runner, tree, track, repeats),
                    per_frame_macs=per_frame,
                    encoder_macs=enc_macs,
                    repeats=used,
                )
            )
    return records


# --- report ---------------------------------------------------------------

_SVG_COLORS = {
    "multirate": "#1965b0",
    "multirate-nopool": "#7bafde",
    "lstm": "#4eb265",
    "selfattn": "#dc050c",
}


def _svg_chart(records: list[BenchRecord]) -> str:
    width, height = 640, 400
    ml, mr, mt, mb = 60, 150, 20, 45
    plot_w, plot_h = width - ml - mr, height - mt - mb
    xs = sorted({r.audio_s for r in records})
    x_min, x_max = min(xs), max(xs)
    y_max = max(r.rtf for r in records) * 1.15 or 1.0
    span = (x_max - x_min) or 1.0

    def px(x):
        return ml + (x - x_min) / span * plot_w

    def py(y):
        return mt + plot_h - y / y_max * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + plot_h}" x2="{ml + plot_w}" y2="{mt + plot_h}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + plot_h}" stroke="black"/>',
        f'<text x="{ml + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle">audio length (s)</text>',
        f'<text x="14" y="{mt + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + plot_h / 2:.1f})">RTF (synthesis s / audio s)</text>',
    ]
    for x in xs:
        parts.append(
            f'<line x1="{px(x):.1f}" y1="{mt + plot_h}" x2="{px(x):.1f}" y2="{mt + plot_h + 4}" stroke="black"/>'
            f'<text x="{px(x):.1f}" y="{mt + plot_h + 18}" text-anchor="middle">{x:g}</text>'
        )
    for i in range(5):
        y = y_max * i / 4
        parts.append(
            f'<line x1="{ml - 4}" y1="{py(y):.1f}" x2="{ml}" y2="{py(y):.1f}" stroke="black"/>'
            f'<text x="{ml - 8}" y="{py(y) + 4:.1f}" text-anchor="end">{y:.3f}</text>'
        )
    models = []
    for r in records:
        if r.model not in models:
            models.append(r.model)
    for idx, model in enumerate(models):
        pts = sorted((r.audio_s, r.rtf) for r in records if r.model == model)
        color = _SVG_COLORS.get(model, "#777777")
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        ly = mt + 14 + idx * 18
        parts.append(
            f'<line x1="{ml + plot_w + 10}" y1="{ly - 4}" x2="{ml + plot_w + 30}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{ml + plot_w + 36}" y="{ly}">{model}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(records: list[BenchRecord], out_dir) -> tuple[str, str]:
    """Write rtf.csv and rtf.svg under ``out_dir``; returns both paths."""
    if not records:
        raise BenchError("no benchmark records to report")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "rtf.csv")
    svg_path = os.path.join(out_dir, "rtf.svg")
    with open(csv_path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for r in records:
            f.write(r.csv_row() + "\n")
    with open(svg_path, "w") as f:
        f.write(_svg_chart(records))
    return csv_path, svg_path
