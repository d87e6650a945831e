"""Model parameter container: deterministic init, file format, builders.

One ``ModelWeights`` holds every tensor one model family needs, as named
float32 arrays plus the ``ModelConfig`` they were built for. The on-disk
format is deliberately dumb so any language can read it:

    bytes 0..3   magic "SMW1"
    bytes 4..7   manifest length, unsigned 32-bit little-endian
    manifest     canonical JSON: {"config": {...}, "tensors": [
                     {"name","shape","offset"}, ...sorted by name]}
                 where offset is the byte position inside the payload
    payload      the tensors' raw float32 little-endian values,
                 concatenated in manifest order

Initialization draws every tensor from its own named PRNG stream (keyed by
the tensor name), so adding or removing a tensor never shifts the values of
the others. Matrix-shaped tensors are scaled-uniform in
±sqrt(6 / (fan_in + fan_out)); biases start at zero, norm gains at one.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import PlainRecurrentWeights, SelfAttentionWeights, TransformerLayerWeights
from .decoder import DecoderWeights
from .encoder import LEVELS, EncoderLevelWeights, EncoderWeights
from .errors import ConfigError, FormatError, IntegrityError
from .features import FRAME_DIM, frame_feature_dim
from .numerics import F32, LstmCellWeights
from .rng import SplitMix64

_MAGIC = b"SMW1"
MODEL_NAMES = ("multirate", "lstm", "selfattn")


@dataclass
class ModelConfig:
    """Dims and flags that fix every tensor shape for one model family."""

    model: str = "multirate"
    d_w: int = 32
    d_s: int = 16
    d_p: int = 24
    d_sent: int = 4
    d_phrase: int = 4
    d_model: int = 128
    kernel: int = 5
    l_max: int = 50
    h1: int = 256
    h2: int = 128
    sa_layers: int = 2
    sa_heads: int = 4
    sa_ff: int = 256
    feedback: bool = True
    pooling: bool = True

    @property
    def d_f(self) -> int:
        return frame_feature_dim(self.d_sent, self.d_phrase)

    def validate(self) -> None:
        if self.model not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODEL_NAMES}")
        for name in ("d_w", "d_s", "d_p", "d_sent", "d_phrase", "d_model", "l_max", "h1", "h2", "sa_layers", "sa_heads", "sa_ff"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError(f"conv kernel must be odd and >= 1, got {self.kernel}")
        if self.d_model % self.sa_heads != 0:
            raise ConfigError(f"d_model {self.d_model} not divisible by {self.sa_heads} heads")


@dataclass
class ModelWeights:
    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def tensor(self, name: str) -> np.ndarray:
        try:
            return self.tensors[name]
        except KeyError:
            raise IntegrityError(f"weights are missing tensor {name!r}") from None


def _glorot_bound(shape: tuple[int, ...]) -> float:
    if len(shape) == 2:
        fan_in, fan_out = shape
    elif len(shape) == 3:
        d_out, d_in, k = shape
        fan_in, fan_out = d_in * k, d_out * k
    else:
        raise ConfigError(f"no fan convention for shape {shape}")
    return math.sqrt(6.0 / (fan_in + fan_out))


def _lstm_plan(prefix: str, d_in: int, hidden: int):
    yield f"{prefix}.w_x", (4 * hidden, d_in), "w"
    yield f"{prefix}.w_h", (4 * hidden, hidden), "w"
    yield f"{prefix}.b", (4 * hidden,), "zero"


def _tensor_plan(cfg: ModelConfig):
    """Yield (name, shape, kind) for every tensor of ``cfg.model``."""
    d_f = cfg.d_f
    if cfg.model == "multirate":
        for level, d in zip(LEVELS, (cfg.d_w, cfg.d_s, cfg.d_p)):
            yield f"enc.{level}.conv1.w", (d, d, cfg.kernel), "w"
            yield f"enc.{level}.conv1.b", (d,), "zero"
            yield f"enc.{level}.conv2.w", (d, d, cfg.kernel), "w"
            yield f"enc.{level}.conv2.b", (d,), "zero"
            yield f"enc.{level}.key.w", (d, d), "w"
            yield f"enc.{level}.value.w", (d, d), "w"
        d_in1 = d_f + (FRAME_DIM if cfg.feedback else 0)
        yield from _lstm_plan("dec.lstm1", d_in1, cfg.h1)
        yield from _lstm_plan("dec.lstm2", cfg.h1, cfg.h2)
        for level, d in zip(LEVELS, (cfg.d_w, cfg.d_s, cfg.d_p)):
            yield f"dec.query.{level}", (cfg.h2, d), "w"
        yield "dec.combine", (cfg.d_w + cfg.d_s + cfg.d_p, cfg.d_model), "w"
        yield "dec.out.w", (cfg.d_model + cfg.h2, FRAME_DIM), "w"
        yield "dec.out.b", (FRAME_DIM,), "zero"
    elif cfg.model == "lstm":
        yield from _lstm_plan("plain.lstm1", d_f, cfg.h1)
        yield from _lstm_plan("plain.lstm2", cfg.h1, cfg.h2)
        yield "plain.out.w", (cfg.h2, FRAME_DIM), "w"
        yield "plain.out.b", (FRAME_DIM,), "zero"
    else:  # selfattn
        yield "sa.in.w", (d_f, cfg.d_model), "w"
        yield "sa.in.b", (cfg.d_model,), "zero"
        for i in range(cfg.sa_layers):
            for proj in ("wq", "wk", "wv", "wo"):
                yield f"sa.layer{i}.{proj}", (cfg.d_model, cfg.d_model), "w"
            yield f"sa.layer{i}.ff1.w", (cfg.d_model, cfg.sa_ff), "w"
            yield f"sa.layer{i}.ff1.b", (cfg.sa_ff,), "zero"
            yield f"sa.layer{i}.ff2.w", (cfg.sa_ff, cfg.d_model), "w"
            yield f"sa.layer{i}.ff2.b", (cfg.d_model,), "zero"
            for ln in ("ln1", "ln2"):
                yield f"sa.layer{i}.{ln}.g", (cfg.d_model,), "one"
                yield f"sa.layer{i}.{ln}.b", (cfg.d_model,), "zero"
        yield from _lstm_plan("sa.dec.lstm", d_f, cfg.d_model)
        yield "sa.dec.query.w", (cfg.d_model, cfg.d_model), "w"
        yield "sa.dec.ff1.w", (cfg.d_model, cfg.sa_ff), "w"
        yield "sa.dec.ff1.b", (cfg.sa_ff,), "zero"
        yield "sa.dec.ff2.w", (cfg.sa_ff, cfg.d_model), "w"
        yield "sa.dec.ff2.b", (cfg.d_model,), "zero"
        for ln in ("ln1", "ln2"):
            yield f"sa.dec.{ln}.g", (cfg.d_model,), "one"
            yield f"sa.dec.{ln}.b", (cfg.d_model,), "zero"
        yield "sa.out.w", (2 * cfg.d_model, FRAME_DIM), "w"
        yield "sa.out.b", (FRAME_DIM,), "zero"


def weights_init(seed: int, config: ModelConfig) -> ModelWeights:
    """Deterministic random weights; identical bytes on every platform."""
    config.validate()
    tensors: dict[str, np.ndarray] = {}
    for name, shape, kind in _tensor_plan(config):
        if kind == "zero":
            tensors[name] = np.zeros(shape, dtype=F32)
        elif kind == "one":
            tensors[name] = np.ones(shape, dtype=F32)
        else:
            rng = SplitMix64(seed, name)
            n = int(np.prod(shape))
            bound = _glorot_bound(shape)
            u = rng.uniform(n)
            tensors[name] = ((u * 2.0 - 1.0) * F32(bound)).reshape(shape)
    return ModelWeights(config=config, tensors=tensors)


def weights_save(w: ModelWeights, path) -> None:
    names = sorted(w.tensors)
    if not names:
        raise FormatError("refusing to write a weight file with no tensors")
    entries = []
    offset = 0
    chunks = []
    for name in names:
        arr = np.ascontiguousarray(w.tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    manifest = json.dumps(
        {"config": asdict(w.config), "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(manifest)))
        f.write(manifest)
        for chunk in chunks:
            f.write(chunk)


def weights_load(path) -> ModelWeights:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise FormatError(f"{path}: not a {_MAGIC.decode()} weight file")
    (mlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + mlen:
        raise FormatError(f"{path}: manifest truncated")
    try:
        manifest = json.loads(blob[8 : 8 + mlen].decode("utf-8"))
        entries = manifest["tensors"]
        cfg_dict = manifest["config"]
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: bad manifest: {e}") from e
    try:
        config = ModelConfig(**cfg_dict)
    except TypeError as e:
        raise FormatError(f"{path}: unknown config fields: {e}") from e

    names = [e.get("name") for e in entries]
    if names != sorted(names):
        raise FormatError(f"{path}: manifest tensor order is not canonical")
    payload = blob[8 + mlen :]
    tensors: dict[str, np.ndarray] = {}
    expect_offset = 0
    for e in entries:
        try:
            name, shape, offset = e["name"], tuple(int(s) for s in e["shape"]), int(e["offset"])
        except (KeyError, TypeError, ValueError) as err:
            raise FormatError(f"{path}: malformed tensor entry {e!r}") from err
        if offset != expect_offset:
            raise IntegrityError(f"{path}: tensor {name!r} offset {offset} != expected {expect_offset}")
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(payload):
            raise IntegrityError(f"{path}: payload truncated at tensor {name!r}")
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.reshape(shape).astype(F32)
        expect_offset = offset + nbytes
    if expect_offset != len(payload):
        raise IntegrityError(f"{path}: {len(payload) - expect_offset} trailing payload bytes")
    return ModelWeights(config=config, tensors=tensors)


# --- typed views ----------------------------------------------------------


def _lstm_view(w: ModelWeights, prefix: str) -> LstmCellWeights:
    return LstmCellWeights(
        w_x=w.tensor(f"{prefix}.w_x"),
        w_h=w.tensor(f"{prefix}.w_h"),
        bias=w.tensor(f"{prefix}.b"),
    )


def build_multirate(w: ModelWeights) -> tuple[EncoderWeights, DecoderWeights]:
    levels = {}
    for level in LEVELS:
        levels[level] = EncoderLevelWeights(
            conv1_w=w.tensor(f"enc.{level}.conv1.w"),
            conv1_b=w.tensor(f"enc.{level}.conv1.b"),
            conv2_w=w.tensor(f"enc.{level}.conv2.w"),
            conv2_b=w.tensor(f"enc.{level}.conv2.b"),
            key_proj=w.tensor(f"enc.{level}.key.w"),
            value_proj=w.tensor(f"enc.{level}.value.w"),
        )
    enc = EncoderWeights(word=levels["word"], syllable=levels["syllable"], phone=levels["phone"])
    dec = DecoderWeights(
        lstm1=_lstm_view(w, "dec.lstm1"),
        lstm2=_lstm_view(w, "dec.lstm2"),
        query_word=w.tensor("dec.query.word"),
        query_syllable=w.tensor("dec.query.syllable"),
        query_phone=w.tensor("dec.query.phone"),
        combine=w.tensor("dec.combine"),
        out_w=w.tensor("dec.out.w"),
        out_b=w.tensor("dec.out.b"),
        feedback=w.config.feedback,
    )
    return enc, dec


def build_plain(w: ModelWeights) -> PlainRecurrentWeights:
    return PlainRecurrentWeights(
        lstm1=_lstm_view(w, "plain.lstm1"),
        lstm2=_lstm_view(w, "plain.lstm2"),
        out_w=w.tensor("plain.out.w"),
        out_b=w.tensor("plain.out.b"),
    )


def build_selfattn(w: ModelWeights) -> SelfAttentionWeights:
    layers = []
    for i in range(w.config.sa_layers):
        p = f"sa.layer{i}"
        layers.append(
            TransformerLayerWeights(
                wq=w.tensor(f"{p}.wq"),
                wk=w.tensor(f"{p}.wk"),
                wv=w.tensor(f"{p}.wv"),
                wo=w.tensor(f"{p}.wo"),
                ff1_w=w.tensor(f"{p}.ff1.w"),
                ff1_b=w.tensor(f"{p}.ff1.b"),
                ff2_w=w.tensor(f"{p}.ff2.w"),
                ff2_b=w.tensor(f"{p}.ff2.b"),
                ln1_g=w.tensor(f"{p}.ln1.g"),
                ln1_b=w.tensor(f"{p}.ln1.b"),
                ln2_g=w.tensor(f"{p}.ln2.g"),
                ln2_b=w.tensor(f"{p}.ln2.b"),
            )
        )
    return SelfAttentionWeights(
        in_proj=w.tensor("sa.in.w"),
        in_b=w.tensor("sa.in.b"),
        layers=layers,
        dec_lstm=_lstm_view(w, "sa.dec.lstm"),
        dec_query=w.tensor("sa.dec.query.w"),
        dec_ff1_w=w.tensor("sa.dec.ff1.w"),
        dec_ff1_b=w.tensor("sa.dec.ff1.b"),
        dec_ff2_w=w.tensor("sa.dec.ff2.w"),
        dec_ff2_b=w.tensor("sa.dec.ff2.b"),
        dec_ln1_g=w.tensor("sa.dec.ln1.g"),
        dec_ln1_b=w.tensor("sa.dec.ln1.b"),
        dec_ln2_g=w.tensor("sa.dec.ln2.g"),
        dec_ln2_b=w.tensor("sa.dec.ln2.b"),
        out_w=w.tensor("sa.out.w"),
        out_b=w.tensor("sa.out.b"),
        n_heads=w.config.sa_heads,
    )
