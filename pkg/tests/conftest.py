"""Shared fixtures: seeded weights, a small corpus, hypothesis profile."""

import numpy as np
import pytest
from hypothesis import settings

from specstream.encoder import encode_all, level_features
from specstream.features import CorpusSpec, synth_corpus, unroll_frames
from specstream.weights import ModelConfig, build_multirate, weights_init

# Numba compilation and cold BLAS paths blow through the default deadline on
# first call; wall-clock health is checked explicitly where it matters.
settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def config():
    return ModelConfig()


@pytest.fixture(scope="session")
def model(config):
    """(encoder_weights, decoder_weights) for seed-0 default weights."""
    mw = weights_init(0, config)
    return build_multirate(mw)


@pytest.fixture(scope="session")
def small_tree():
    return synth_corpus(7, CorpusSpec(target_frames=200))[0]


@pytest.fixture(scope="session")
def small_track(small_tree):
    return unroll_frames(small_tree)


@pytest.fixture(scope="session")
def small_encodings(small_tree, model, config):
    enc_w, _ = model
    return encode_all(level_features(small_tree), enc_w, config.l_max)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
