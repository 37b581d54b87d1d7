"""Shared fixtures for the span NER test suite."""

import numpy as np
import pytest

from lib.ner.corpus import parse_bio
from lib.ner.hyperparams import Hyperparams
from lib.ner.synthetic import synthetic_splits

TINY_BIO = """EU\tB-ORG
rejects\tO
German\tB-MISC
call\tO

Peter\tB-PER
Blackburn\tI-PER

BRUSSELS\tB-LOC
1996-08-22\tO
"""


@pytest.fixture
def tiny_dataset():
    return parse_bio(TINY_BIO)


@pytest.fixture
def rng():
    return np.random.default_rng(20250214)


@pytest.fixture
def small_hyper():
    """A model small enough to train in well under a second per epoch."""
    return Hyperparams(epochs=3, learning_rate=0.01, batch_size=8, max_span_len=4,
                       embed_dim=8, hidden_dim=16, projection_dim=16, seed=5)


@pytest.fixture(scope="session")
def synthetic_small():
    """(train, dev, test, extra) with 60/20/20/40 sentences."""
    return synthetic_splits(seed=3, n_train=60, n_dev=20, n_test=20, n_extra=40)
