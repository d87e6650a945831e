#!/usr/bin/env python3
"""Measure how synthesis cost scales with utterance length.

Runs every registered model over a sweep of audio lengths (single thread,
median of repeated runs), prints a summary table, and drops rtf.csv plus
rtf.svg under --out. The expected picture:

* multirate        -- flat RTF and flat per-frame MACs (pooling caps context)
* multirate-nopool -- same model, pooling off: cost climbs with length
* lstm             -- flat, and the cheapest in absolute terms
* selfattn         -- RTF grows with length (quadratic attention)

This is an experiment driver, not a pass/fail gate; the assertions live in
tests/test_acceptance.py.
"""

from __future__ import annotations

import argparse
import sys

from specstream.benchmark import MODEL_CHOICES, emit_report, run_bench


def summarize(records) -> str:
    by_model: dict[str, list] = {}
    for r in records:
        by_model.setdefault(r.model, []).append(r)
    lines = []
    for model, rows in by_model.items():
        rows.sort(key=lambda r: r.audio_s)
        rtfs = [r.rtf for r in rows]
        ratio = max(rtfs) / min(rtfs)
        macs = {r.per_frame_macs for r in rows}
        shape = "constant" if ratio <= 1.2 else "growing"
        lines.append(
            f"  {model:<18} rtf {min(rtfs):.4f}..{max(rtfs):.4f}"
            f"  (max/min {ratio:.3f}, {shape})"
            f"  per-frame MACs {'constant' if len(macs) == 1 else 'varying'}"
        )
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", nargs="+", default=list(MODEL_CHOICES),
                        choices=MODEL_CHOICES, metavar="MODEL")
    parser.add_argument("--lengths", nargs="+", type=float,
                        default=[10.0, 20.0, 40.0, 60.0],
                        help="audio lengths in seconds (default: 10 20 40 60)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per point; the median is kept")
    parser.add_argument("--lmax", type=int, default=50,
                        help="pooled length cap for the multirate models")
    parser.add_argument("--out", default="bench_out",
                        help="directory for rtf.csv / rtf.svg")
    args = parser.parse_args(argv)

    print(f"models:  {' '.join(args.models)}")
    print(f"lengths: {' '.join(f'{s:g}s' for s in args.lengths)}"
          f"   seed {args.seed}, {args.repeats} repeats, l_max {args.lmax}")
    records = run_bench(args.models, args.lengths, args.seed,
                        repeats=args.repeats, l_max=args.lmax)

    header = f"{'model':<18} {'audio_s':>8} {'rtf':>9} {'first_ms':>9} {'frame_MACs':>11}"
    print()
    print(header)
    print("-" * len(header))
    for r in records:
        print(f"{r.model:<18} {r.audio_s:>8g} {r.rtf:>9.4f}"
              f" {r.first_frame_ms:>9.3f} {r.per_frame_macs:>11}")

    print()
    print(summarize(records))
    csv_path, svg_path = emit_report(records, args.out)
    print(f"\nwrote {csv_path} and {svg_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
