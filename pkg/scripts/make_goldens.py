#!/usr/bin/env python3
"""Regenerate tests/goldens/frozen.json.

The file pins seed-fixed outputs (weight-file digests, decoded frame
checksums, a canonical corpus document) so any unintended change to weight
layout, initialization, feature unrolling, or decode arithmetic fails the
suite loudly. Run this only when such a change is deliberate, and commit the
diff together with the code that caused it.
"""

import hashlib
import json
import pathlib
import sys
import tempfile

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from specstream.baselines import (
    plain_recurrent_decode,
    self_attention_decode,
    self_attention_encode,
)
from specstream.decoder import decode_to_array
from specstream.encoder import encode_all, level_features
from specstream.features import CorpusSpec, context_tree_to_json, synth_corpus, unroll_frames
from specstream.weights import (
    ModelConfig,
    build_multirate,
    build_plain,
    build_selfattn,
    weights_init,
    weights_save,
)

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "goldens" / "frozen.json"


def sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def saved_bytes(mw) -> bytes:
    with tempfile.NamedTemporaryFile(suffix=".weights") as f:
        weights_save(mw, f.name)
        return pathlib.Path(f.name).read_bytes()


def main() -> None:
    golden: dict = {}

    for family in ("multirate", "lstm", "selfattn"):
        mw = weights_init(0, ModelConfig(model=family))
        golden[f"weights_sha256/{family}"] = sha(saved_bytes(mw))

    tree = synth_corpus(5, CorpusSpec(target_frames=160))[0]
    track = unroll_frames(tree)
    golden["corpus_tree_sha256"] = sha(context_tree_to_json(tree).encode())

    cfg = ModelConfig()
    enc_w, dec_w = build_multirate(weights_init(0, cfg))
    encs = encode_all(level_features(tree), enc_w, cfg.l_max)
    frames = decode_to_array(track, encs, dec_w)
    golden["multirate_decode_sha256"] = sha(frames.astype("<f4").tobytes())
    golden["multirate_frame0"] = [float(v) for v in frames[0]]

    pw = build_plain(weights_init(0, ModelConfig(model="lstm")))
    frames = plain_recurrent_decode(track, pw)
    golden["plain_decode_sha256"] = sha(frames.astype("<f4").tobytes())

    sw = build_selfattn(weights_init(0, ModelConfig(model="selfattn")))
    memory = self_attention_encode(track.frames, sw)
    frames = self_attention_decode(track, sw, memory=memory)
    golden["selfattn_frame0"] = [float(v) for v in frames[0]]

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")
    for k, v in sorted(golden.items()):
        print(f"  {k}: {v if isinstance(v, str) else '[19 floats]'}")


if __name__ == "__main__":
    main()
