"""Tests for the templated synthetic corpus."""

import re

import pytest

from lib.ner.corpus import distant_supervise
from lib.ner.synthetic import (
    AMBIGUOUS_TEMPLATES,
    ENTITY_TYPES,
    ORG_SUFFIXES,
    SLOT,
    TEMPLATES,
    generate_synthetic_corpus,
    is_held_out,
    partial_dictionary,
    synthetic_raw_and_dictionary,
    synthetic_splits,
)

GENERATED = re.compile(r"^[bdfgklmnprstvz][aeiou](?:[bdfgklmnprstvz][aeiou]){2}$")
TEMPLATE_WORDS = {piece for template in TEMPLATES + AMBIGUOUS_TEMPLATES for piece in template.split(" ")}


def _generated_words(dataset, in_spans=True):
    """Lowercased generated words of a dataset, only those inside gold spans by default."""
    words = set()
    for sentence, spans in dataset:
        pieces = [sentence.tokens[s.start:s.end + 1] for s in spans] if in_spans else [sentence.tokens]
        words.update(tok.lower() for piece in pieces for tok in piece
                     if GENERATED.match(tok.lower()) and tok.lower() not in TEMPLATE_WORDS)
    return words


def test_deterministic():
    first = generate_synthetic_corpus(50, seed=7)
    second = generate_synthetic_corpus(50, seed=7)
    assert first.sentences == second.sentences
    assert first.annotations == second.annotations
    assert generate_synthetic_corpus(50, seed=8).sentences != first.sentences


def test_label_set():
    assert generate_synthetic_corpus(5, seed=1).label_set.labels == ("LOC", "ORG", "PER", "O")


def test_spans_are_capitalized_names():
    corpus = generate_synthetic_corpus(200, seed=2)
    for sentence, spans in corpus:
        for span in spans:
            tokens = sentence.tokens[span.start:span.end + 1]
            assert 1 <= len(tokens) <= 3
            assert all(tok[0].isupper() for tok in tokens)
            if span.label == "ORG" and len(tokens) == 3:
                assert tokens[-1] in ORG_SUFFIXES


def test_splits_have_consecutive_ids():
    splits = synthetic_splits(seed=4, n_train=10, n_dev=5, n_test=5, n_extra=7)
    ids = [s.id for split in splits for s in split.sentences]
    assert ids == list(range(27))
    assert [len(split) for split in splits] == [10, 5, 5, 7]


def test_dev_and_test_names_never_occur_in_training():
    train, dev, test, extra = synthetic_splits(seed=4, n_train=300, n_dev=100, n_test=100, n_extra=300)
    seen = _generated_words(train, in_spans=False) | _generated_words(extra, in_spans=False)
    held = _generated_words(dev) | _generated_words(test)
    assert held
    assert all(is_held_out(word) for word in held)
    assert not held & seen
    assert not any(is_held_out(word) for word in _generated_words(train) | _generated_words(extra))


def _slot_context(template):
    """(two words before, word after) the ambiguous slot of a template."""
    pieces = template.split(" ")
    k = next(i for i, piece in enumerate(pieces) if "?" in piece)
    return pieces[k - 2], pieces[k - 1], pieces[k + 1]


@pytest.mark.parametrize("template", AMBIGUOUS_TEMPLATES)
def test_ambiguous_share_is_just_above_half(template):
    shares = [int(SLOT.match(p).group(2)) for p in template.split(" ") if "?" in p]
    assert len(shares) == 1
    assert 50 < shares[0] < 62


def test_ambiguous_slots_mix_names_and_common_words():
    contexts = {_slot_context(t) for t in AMBIGUOUS_TEMPLATES}
    corpus = generate_synthetic_corpus(2000, seed=9)
    slots = named = 0
    for sentence, spans in corpus:
        tokens = sentence.tokens
        for k in range(2, len(tokens) - 1):
            if (tokens[k - 2], tokens[k - 1], tokens[k + 1]) in contexts:
                slots += 1
                named += any(s.start == k and s.end == k for s in spans)
                assert tokens[k][0].isupper() == any(s.start == k for s in spans)
    assert slots > 500
    assert 0.5 < named / slots < 0.65


def test_partial_dictionary_size():
    corpus = generate_synthetic_corpus(100, seed=3)
    distinct = {t: {sentence.tokens[s.start:s.end + 1] for sentence, spans in corpus for s in spans if s.label == t}
                for t in ENTITY_TYPES}
    for fraction in (0.0, 0.3, 0.5, 1.0):
        dictionary = partial_dictionary(corpus, fraction, seed=3)
        assert len(dictionary) == sum(int(round(fraction * len(distinct[t]))) for t in ENTITY_TYPES)
        for surface, label in dictionary.entries.items():
            assert surface in distinct[label]


def test_distant_supervision_misses_entities():
    raw, dictionary, gold = synthetic_raw_and_dictionary(200, seed=5, fraction=0.6)
    distant = distant_supervise(raw, dictionary, gold.label_set)
    assert 0 < distant.num_spans < gold.num_spans
    for sentence, spans in distant:
        for span in spans:
            assert dictionary.lookup(sentence.tokens[span.start:span.end + 1]) == span.label
