"""Hierarchical linguistic features, frame unrolling, synthetic corpora.

A :class:`ContextTree` holds one utterance's features at sentence, phrase,
word, syllable and phone granularity, plus the alignment counts that nest the
levels and the per-phone frame durations. Trees arrive pre-computed as JSON
documents (see :func:`parse_context_tree` for the schema); a deterministic
generator (:func:`synth_corpus`) produces them for tests and benchmarks.

Unrolling (:func:`unroll_frames`) repeats the hierarchy along the duration
axis to build the frame-rate input rows consumed by the decoders. Each frame
row is laid out as::

    [ sentence feats | phrase feats | first k dims of current phone's feats |
      position-in-phone (0-based) | phone duration | position/duration | f0 ]

Sentence and phrase features are broadcast (they get no attention head of
their own); the input-side f0 is a synthetic slow sinusoid standing in for a
prosody model's contour. Frames advance at 12.5 ms (80 frames/s).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from .rng import SplitMix64

FRAME_DIM = 19
MFCC_DIM = 13
PERIODICITY_DIM = 5
FRAME_SHIFT_MS = 12.5
FRAMES_PER_SECOND = 1000.0 / FRAME_SHIFT_MS

# Frame columns that do not come from the tree: pos, duration, pos/duration, f0.
_FIXED_FRAME_COLS = 4
_F0_PERIOD_FRAMES = 160.0


@dataclass
class SpectrumFrame:
    """One 19-dim output frame: 13 MFCC + f0 + 5 periodicity values."""

    mfcc: np.ndarray
    f0: float
    periodicity: np.ndarray

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "SpectrumFrame":
        if v.shape != (FRAME_DIM,):
            raise ValidationError(f"spectrum frame must have {FRAME_DIM} values, got {v.shape}")
        return cls(mfcc=v[:MFCC_DIM].copy(), f0=float(v[MFCC_DIM]), periodicity=v[MFCC_DIM + 1 :].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.mfcc, np.array([self.f0], dtype=np.float32), self.periodicity]
        ).astype(np.float32)


@dataclass
class ContextTree:
    """One utterance's multi-level features plus alignment and durations."""

    sentence_feats: np.ndarray
    phrase_feats: np.ndarray
    phrase_word_counts: np.ndarray
    word_feats: np.ndarray
    syllable_feats: np.ndarray
    phone_feats: np.ndarray
    word_syllable_counts: np.ndarray
    syllable_phone_counts: np.ndarray
    phone_durations: np.ndarray

    def __post_init__(self):
        self.sentence_feats = np.asarray(self.sentence_feats, dtype=np.float32)
        self.phrase_feats = np.atleast_2d(np.asarray(self.phrase_feats, dtype=np.float32))
        self.word_feats = np.asarray(self.word_feats, dtype=np.float32)
        self.syllable_feats = np.asarray(self.syllable_feats, dtype=np.float32)
        self.phone_feats = np.asarray(self.phone_feats, dtype=np.float32)
        self.phrase_word_counts = np.asarray(self.phrase_word_counts, dtype=np.int64)
        self.word_syllable_counts = np.asarray(self.word_syllable_counts, dtype=np.int64)
        self.syllable_phone_counts = np.asarray(self.syllable_phone_counts, dtype=np.int64)
        self.phone_durations = np.asarray(self.phone_durations, dtype=np.int64)

        for name, feats in (("word", self.word_feats), ("syllable", self.syllable_feats), ("phone", self.phone_feats)):
            if feats.ndim != 2 or feats.shape[0] < 1:
                raise ValidationError(f"{name} features must be a non-empty 2-D matrix, got {feats.shape}")
        if self.sentence_feats.ndim != 1:
            raise ValidationError("sentence features must be a single vector")

        if self.phrase_word_counts.sum() != self.n_words or (self.phrase_word_counts < 1).any():
            raise ValidationError(
                f"phrase level: word counts {self.phrase_word_counts.tolist()} do not cover {self.n_words} words"
            )
        if len(self.phrase_word_counts) != len(self.phrase_feats):
            raise ValidationError("phrase level: one word count required per phrase")
        if len(self.word_syllable_counts) != self.n_words:
            raise ValidationError("word level: one syllable count required per word")
        if self.word_syllable_counts.sum() != self.n_syllables or (self.word_syllable_counts < 1).any():
            raise ValidationError(
                f"word level: syllable counts sum to {self.word_syllable_counts.sum()}, have {self.n_syllables} syllables"
            )
        if len(self.syllable_phone_counts) != self.n_syllables:
            raise ValidationError("syllable level: one phone count required per syllable")
        if self.syllable_phone_counts.sum() != self.n_phones or (self.syllable_phone_counts < 1).any():
            raise ValidationError(
                f"syllable level: phone counts sum to {self.syllable_phone_counts.sum()}, have {self.n_phones} phones"
            )
        if len(self.phone_durations) != self.n_phones:
            raise ValidationError("phone level: one duration required per phone")
        if (self.phone_durations < 1).any():
            raise ValidationError("phone level: durations must all be >= 1 frame")

    @property
    def n_words(self) -> int:
        return self.word_feats.shape[0]

    @property
    def n_syllables(self) -> int:
        return self.syllable_feats.shape[0]

    @property
    def n_phones(self) -> int:
        return self.phone_feats.shape[0]

    @property
    def n_frames(self) -> int:
        return int(self.phone_durations.sum())


@dataclass
class FrameFeatureTrack:
    """Frame-rate input features unrolled from one tree."""

    frames: np.ndarray
    frame_shift_ms: float = FRAME_SHIFT_MS

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2:
            raise ValidationError(f"frame track must be 2-D, got {self.frames.shape}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.frames.shape[1]

    @property
    def audio_seconds(self) -> float:
        return self.n_frames * self.frame_shift_ms / 1000.0


def unroll_frames(tree: ContextTree, phone_feature_dims: int = 8) -> FrameFeatureTrack:
    """Roll the tree out along phone durations into frame-rate features.

    ``phone_feature_dims`` dims of the current phone's feature vector are
    copied into each frame (clamped to the phone feature width).
    """
    k = min(phone_feature_dims, tree.phone_feats.shape[1])
    durations = tree.phone_durations
    n_frames = int(durations.sum())

    phone_of_frame = np.repeat(np.arange(tree.n_phones), durations)
    starts = np.repeat(np.concatenate([[0], np.cumsum(durations)[:-1]]), durations)
    pos_in_phone = np.arange(n_frames) - starts
    dur_of_frame = np.repeat(durations, durations)

    syllable_of_phone = np.repeat(np.arange(tree.n_syllables), tree.syllable_phone_counts)
    word_of_syllable = np.repeat(np.arange(tree.n_words), tree.word_syllable_counts)
    phrase_of_word = np.repeat(np.arange(len(tree.phrase_word_counts)), tree.phrase_word_counts)
    word_of_frame = word_of_syllable[syllable_of_phone[phone_of_frame]]
    phrase_of_frame = phrase_of_word[word_of_frame]

    t = np.arange(n_frames, dtype=np.float64)
    f0 = 0.5 + 0.5 * np.sin(2.0 * math.pi * t / _F0_PERIOD_FRAMES)

    cols = [
        np.broadcast_to(tree.sentence_feats, (n_frames, tree.sentence_feats.shape[0])),
        tree.phrase_feats[phrase_of_frame],
        tree.phone_feats[phone_of_frame, :k],
        pos_in_phone[:, None].astype(np.float32),
        dur_of_frame[:, None].astype(np.float32),
        (pos_in_phone / dur_of_frame)[:, None].astype(np.float32),
        f0[:, None].astype(np.float32),
    ]
    return FrameFeatureTrack(frames=np.hstack(cols))


def frame_feature_dim(d_sent: int, d_phrase: int, phone_feature_dims: int = 8) -> int:
    return d_sent + d_phrase + phone_feature_dims + _FIXED_FRAME_COLS


@dataclass
class CorpusSpec:
    """Knobs for the synthetic corpus generator.

    ``words`` bounds the per-utterance word count; if ``target_frames`` is
    set, words are appended until the durations reach it, trailing phones
    are dropped and the last one shortened so the total hits the target
    exactly.
    """

    sentences: int = 1
    words: tuple[int, int] = (8, 40)
    words_per_phrase: tuple[int, int] = (2, 6)
    syllables_per_word: tuple[int, int] = (1, 4)
    phones_per_syllable: tuple[int, int] = (1, 3)
    duration_frames: tuple[int, int] = (3, 30)
    target_frames: int | None = None
    d_sent: int = 4
    d_phrase: int = 4
    d_w: int = 32
    d_s: int = 16
    d_p: int = 24

    def validate(self) -> None:
        if self.sentences < 1:
            raise ConfigError("corpus needs at least one sentence")
        if self.target_frames is None and self.words[0] < 1:
            raise ConfigError("corpus needs at least one word per utterance")
        if self.target_frames is not None and self.target_frames < 1:
            raise ConfigError("target_frames must be >= 1")
        for name, rng_pair in (
            ("words", self.words),
            ("words_per_phrase", self.words_per_phrase),
            ("syllables_per_word", self.syllables_per_word),
            ("phones_per_syllable", self.phones_per_syllable),
            ("duration_frames", self.duration_frames),
        ):
            lo, hi = rng_pair
            if lo < 1 or hi < lo:
                raise ConfigError(f"{name} range ({lo}, {hi}) is degenerate")


def synth_corpus(seed: int, spec: CorpusSpec) -> list[ContextTree]:
    """Deterministically generate ``spec.sentences`` random context trees."""
    spec.validate()
    return [_synth_tree(SplitMix64(seed, f"tree/{i}"), spec) for i in range(spec.sentences)]


def _synth_tree(rng: SplitMix64, spec: CorpusSpec) -> ContextTree:
    if spec.target_frames is None:
        n_words = int(rng.int_range(*spec.words)[0])
    else:
        # Generous upper bound on words; generation stops at the target.
        n_words = 1 + spec.target_frames // spec.duration_frames[0]

    syllable_counts: list[int] = []
    phone_counts: list[int] = []
    durations: list[int] = []
    words_used = 0
    for _ in range(n_words):
        syl = int(rng.int_range(*spec.syllables_per_word)[0])
        phones = rng.int_range(*spec.phones_per_syllable, n=syl)
        durs = rng.int_range(*spec.duration_frames, n=int(phones.sum()))
        syllable_counts.append(syl)
        phone_counts.extend(int(p) for p in phones)
        durations.extend(int(d) for d in durs)
        words_used += 1
        if spec.target_frames is not None and sum(durations) >= spec.target_frames:
            break

    if spec.target_frames is not None:
        if sum(durations) < spec.target_frames:
            raise ConfigError(
                f"generated {sum(durations)} frames, below target {spec.target_frames}"
            )
        # Keep the shortest phone prefix reaching the target, shave the rest
        # off the last kept phone, and drop structure the cut emptied out.
        total = 0
        for m, d in enumerate(durations, start=1):
            total += d
            if total >= spec.target_frames:
                break
        durations = durations[:m]
        durations[-1] -= total - spec.target_frames

        kept = m
        phone_counts, full = [], phone_counts
        for c in full:
            take = min(c, kept)
            if take == 0:
                break
            phone_counts.append(take)
            kept -= take
        kept = len(phone_counts)
        syllable_counts, full = [], syllable_counts
        for c in full:
            take = min(c, kept)
            if take == 0:
                break
            syllable_counts.append(take)
            kept -= take
        words_used = len(syllable_counts)

    n_words = words_used
    n_syllables = sum(syllable_counts)
    n_phones = sum(phone_counts)

    phrase_word_counts: list[int] = []
    remaining = n_words
    while remaining > 0:
        size = min(int(rng.int_range(*spec.words_per_phrase)[0]), remaining)
        phrase_word_counts.append(size)
        remaining -= size

    return ContextTree(
        sentence_feats=rng.normal(spec.d_sent),
        phrase_feats=rng.normal(len(phrase_word_counts) * spec.d_phrase).reshape(-1, spec.d_phrase),
        phrase_word_counts=np.array(phrase_word_counts),
        word_feats=rng.normal(n_words * spec.d_w).reshape(n_words, spec.d_w),
        syllable_feats=rng.normal(n_syllables * spec.d_s).reshape(n_syllables, spec.d_s),
        phone_feats=rng.normal(n_phones * spec.d_p).reshape(n_phones, spec.d_p),
        word_syllable_counts=np.array(syllable_counts),
        syllable_phone_counts=np.array(phone_counts),
        phone_durations=np.array(durations),
    )


# --- JSON serialization ---------------------------------------------------
#
# Document layout (all feature arrays are plain number lists):
#   {
#     "sentence": [...],
#     "phrases": [{"feats": [...], "word_count": n}, ...],
#     "words": [[...], ...],
#     "syllables": [[...], ...],
#     "phones": [[...], ...],
#     "alignment": {"word_syllable_counts": [...], "syllable_phone_counts": [...]},
#     "durations": [...]
#   }

_TOP_KEYS = ("sentence", "phrases", "words", "syllables", "phones", "alignment", "durations")


def _number_list(obj, path: str) -> list[float]:
    if not isinstance(obj, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
        raise ParseError(f"{path}: expected a list of numbers")
    return [float(x) for x in obj]


def _int_list(obj, path: str) -> list[int]:
    if not isinstance(obj, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in obj):
        raise ParseError(f"{path}: expected a list of integers")
    return list(obj)


def _feature_matrix(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) == 0:
        raise ParseError(f"{path}: expected a non-empty list of feature rows")
    rows = [_number_list(row, f"{path}[{i}]") for i, row in enumerate(obj)]
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}[{i}]: row has {len(row)} values, expected {width}")
    return np.array(rows, dtype=np.float32)


def parse_context_tree(document: str | dict) -> ContextTree:
    """Parse and validate a context-tree JSON document (text or dict)."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"$: not valid JSON ({e})") from e
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ParseError("$: top level must be an object")
    for key in _TOP_KEYS:
        if key not in doc:
            raise ParseError(f"$.{key}: missing")

    phrases = doc["phrases"]
    if not isinstance(phrases, list) or len(phrases) == 0:
        raise ParseError("$.phrases: expected a non-empty list")
    phrase_rows, phrase_counts = [], []
    for i, entry in enumerate(phrases):
        if not isinstance(entry, dict) or "feats" not in entry or "word_count" not in entry:
            raise ParseError(f"$.phrases[{i}]: expected an object with 'feats' and 'word_count'")
        phrase_rows.append(_number_list(entry["feats"], f"$.phrases[{i}].feats"))
        if not isinstance(entry["word_count"], int) or isinstance(entry["word_count"], bool):
            raise ParseError(f"$.phrases[{i}].word_count: expected an integer")
        phrase_counts.append(entry["word_count"])
    width = len(phrase_rows[0])
    if any(len(r) != width for r in phrase_rows):
        raise ParseError("$.phrases: feature rows differ in width")

    align = doc["alignment"]
    if not isinstance(align, dict):
        raise ParseError("$.alignment: expected an object")
    for key in ("word_syllable_counts", "syllable_phone_counts"):
        if key not in align:
            raise ParseError(f"$.alignment.{key}: missing")

    return ContextTree(
        sentence_feats=np.array(_number_list(doc["sentence"], "$.sentence"), dtype=np.float32),
        phrase_feats=np.array(phrase_rows, dtype=np.float32),
        phrase_word_counts=np.array(phrase_counts),
        word_feats=_feature_matrix(doc["words"], "$.words"),
        syllable_feats=_feature_matrix(doc["syllables"], "$.syllables"),
        phone_feats=_feature_matrix(doc["phones"], "$.phones"),
        word_syllable_counts=np.array(_int_list(align["word_syllable_counts"], "$.alignment.word_syllable_counts")),
        syllable_phone_counts=np.array(_int_list(align["syllable_phone_counts"], "$.alignment.syllable_phone_counts")),
        phone_durations=np.array(_int_list(doc["durations"], "$.durations")),
    )


def serialize_context_tree(tree: ContextTree) -> dict:
    return {
        "sentence": [float(x) for x in tree.sentence_feats],
        "phrases": [
            {"feats": [float(x) for x in row], "word_count": int(c)}
            for row, c in zip(tree.phrase_feats, tree.phrase_word_counts)
        ],
        "words": [[float(x) for x in row] for row in tree.word_feats],
        "syllables": [[float(x) for x in row] for row in tree.syllable_feats],
        "phones": [[float(x) for x in row] for row in tree.phone_feats],
        "alignment": {
            "word_syllable_counts": [int(c) for c in tree.word_syllable_counts],
            "syllable_phone_counts": [int(c) for c in tree.syllable_phone_counts],
        },
        "durations": [int(d) for d in tree.phone_durations],
    }


def context_tree_to_json(tree: ContextTree) -> str:
    """Canonical JSON text: sorted keys, compact separators, trailing newline."""
    return json.dumps(serialize_context_tree(tree), sort_keys=True, separators=(",", ":")) + "\n"
