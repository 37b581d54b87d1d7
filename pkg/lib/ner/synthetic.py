"""
Synthetic Corpus Generator

Templated English sentences over three entity types (PER, LOC, ORG).

Names are built from random syllables, so almost every name is new. One name
word in HOLDOUT_MODULUS (by a stable hash) is reserved for the dev and test
splits; training never sees those words. Templates come in two kinds:

- clear templates, whose context words identify the entity type
- ambiguous templates, where one slot holds a single-word name with a fixed
  probability and a lowercase common word otherwise; the slot context is the
  same either way

With a vocabulary that maps one-off words to UNK, a model can only learn the
entity share of an ambiguous slot, not which fillers are names.

Author: SpanNER Team
Date: 2025-02-13
"""

import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

from .constants import STREAM_SYNTHETIC, STREAM_SYNTHETIC_DICTIONARY
from .corpus import Dataset, EntityDictionary, GoldSpan, LabelSet, Sentence
from .logging_conventions import LogModules, log_debug
from .random_streams import derive_rng, label_hash
from .validation import Validator

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("LOC", "ORG", "PER")

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"
HOLDOUT_MODULUS = 4
WORD_SYLLABLES = 3  # 70^3 words, so repeats are rare

ORG_SUFFIXES = ("Group", "Bank", "Labs", "Systems", "Partners", "Holdings", "Institute", "Motors")
LOC_PREFIXES = ("Port", "Lake", "Mount", "San")

AMBIGUOUS_SHARE = 0.5  # fraction of sentences drawn from AMBIGUOUS_TEMPLATES

# {TYPE} is a full name; {TYPE?NN} is a one-word name with NN% probability, else a common word
SLOT = re.compile(r"^\{(LOC|ORG|PER)(?:\?(\d{1,2}))?\}$")

TEMPLATES: Tuple[str, ...] = (
    "{PER} was born in {LOC} .",
    "{PER} works for {ORG} .",
    "{ORG} opened an office in {LOC} .",
    "yesterday {PER} met {PER} at the conference .",
    "the mayor of {LOC} thanked {ORG} for the donation .",
    "shares of {ORG} rose sharply on monday .",
    "{PER} , a spokesperson for {ORG} , declined to comment .",
    "heavy rain fell across {LOC} on sunday .",
    "{ORG} and {ORG} announced a merger .",
    "the report was written by {PER} .",
    "flights from {LOC} to {LOC} were cancelled .",
    "nothing unusual happened this morning .",
    "prices are expected to fall next quarter .",
    "{PER} said the talks with {ORG} went well .",
    "tourists crowded the old town of {LOC} .",
    "police in {LOC} arrested a man on friday .",
    "the board of {ORG} appointed {PER} as chief executive .",
    "{PER} moved to {LOC} in the spring .",
    "analysts expect {ORG} to report higher profits .",
    "{PER} scored twice in the final .",
    "a new bridge will connect {LOC} and {LOC} .",
    "the museum sold a painting to {ORG} .",
)

# Entity shares sit just above one half
AMBIGUOUS_TEMPLATES: Tuple[str, ...] = (
    "{PER} talked about {LOC?55} for hours .",
    "everyone was surprised by {ORG?57} this year .",
    "they could not stop thinking of {PER?60} .",
    "nobody had heard of {LOC?56} before .",
    "the film was inspired by {ORG?59} and its history .",
    "she wrote a long essay on {LOC?58} last winter .",
    "the children drew pictures of {PER?57} in class .",
    "{PER} kept a diary about {ORG?58} for years .",
)


# ============================================================================
# Words and Names
# ============================================================================

def is_held_out(word: str) -> bool:
    """Whether a generated word belongs to the dev/test pool (case-insensitive, stable)."""
    return label_hash(word.lower()) % HOLDOUT_MODULUS == 0


def _word(rng, held_out: bool) -> str:
    """A lowercase word from the requested pool."""
    while True:
        word = "".join(CONSONANTS[int(rng.integers(len(CONSONANTS)))] + VOWELS[int(rng.integers(len(VOWELS)))]
                       for _ in range(WORD_SYLLABLES))
        if is_held_out(word) == held_out:
            return word


def _name(entity_type: str, rng, held_out: bool) -> List[str]:
    word = _word(rng, held_out).capitalize()
    u = rng.random()
    if entity_type == "PER":
        return [word, _word(rng, held_out).capitalize()] if u < 0.7 else [word]
    if entity_type == "LOC":
        return [word] if u < 0.7 else [LOC_PREFIXES[int(rng.integers(len(LOC_PREFIXES)))], word]
    suffix = ORG_SUFFIXES[int(rng.integers(len(ORG_SUFFIXES)))]
    if u < 0.2:
        return [word]
    if u < 0.8:
        return [word, suffix]
    return [word, _word(rng, held_out).capitalize(), suffix]


def _fill(template: str, rng, held_out: bool) -> Tuple[List[str], List[GoldSpan]]:
    tokens: List[str] = []
    spans: List[GoldSpan] = []
    for piece in template.split(" "):
        slot = SLOT.match(piece)
        if slot is None:
            tokens.append(piece)
            continue
        entity_type, share = slot.group(1), slot.group(2)
        if share is None:
            name = _name(entity_type, rng, held_out)
        elif rng.random() < int(share) / 100.0:
            name = [_word(rng, held_out).capitalize()]
        else:
            tokens.append(_word(rng, held_out))
            continue
        spans.append(GoldSpan(len(tokens), len(tokens) + len(name) - 1, entity_type))
        tokens.extend(name)
    return tokens, spans


# ============================================================================
# Corpora
# ============================================================================

def synthetic_label_set() -> LabelSet:
    return LabelSet.from_entity_types(ENTITY_TYPES)


def generate_synthetic_corpus(n_sentences: int, seed: int, first_id: int = 0,
                              held_out: bool = False) -> Dataset:
    """
    n_sentences templated sentences with ids first_id, first_id + 1, ...

    Deterministic in (seed, first_id, held_out). held_out=True draws every
    name and common word from the dev/test pool.

    Example:
        >>> corpus = generate_synthetic_corpus(100, seed=7)
        >>> corpus.label_set.labels
        ('LOC', 'ORG', 'PER', 'O')
    """
    Validator.validate_range(n_sentences, "n_sentences", min_val=0)
    rng = derive_rng(seed, STREAM_SYNTHETIC, first_id, int(held_out))
    sentences, annotations = [], []
    for k in range(n_sentences):
        pool = AMBIGUOUS_TEMPLATES if rng.random() < AMBIGUOUS_SHARE else TEMPLATES
        tokens, spans = _fill(pool[int(rng.integers(len(pool)))], rng, held_out)
        sentences.append(Sentence(first_id + k, tuple(tokens)))
        annotations.append(tuple(spans))
    dataset = Dataset(tuple(sentences), tuple(annotations), synthetic_label_set())
    log_debug(logger, LogModules.SYNTHETIC, "Generated corpus", sentences=n_sentences,
              spans=dataset.num_spans, seed=seed, held_out=held_out)
    return dataset


def synthetic_splits(seed: int, n_train: int = 2000, n_dev: int = 500, n_test: int = 500,
                     n_extra: int = 2000) -> Tuple[Dataset, Dataset, Dataset, Dataset]:
    """
    (train, dev, test, extra) with consecutive, disjoint id ranges.

    Dev and test use the held-out word pool, so none of their names occur in
    train or extra.
    """
    splits = []
    first_id = 0
    for n, held_out in ((n_train, False), (n_dev, True), (n_test, True), (n_extra, False)):
        splits.append(generate_synthetic_corpus(n, seed, first_id, held_out))
        first_id += n
    return tuple(splits)


# ============================================================================
# Entity Dictionaries
# ============================================================================

def _surfaces_by_type(corpus: Dataset) -> Dict[str, List[Tuple[str, ...]]]:
    """Distinct gold surface forms per entity type, in corpus order."""
    surfaces: Dict[str, List[Tuple[str, ...]]] = {t: [] for t in corpus.label_set.entity_labels}
    seen = set()
    for sentence, spans in corpus:
        for span in spans:
            surface = sentence.tokens[span.start:span.end + 1]
            if surface not in seen:
                seen.add(surface)
                surfaces[span.label].append(surface)
    return surfaces


def partial_dictionary(corpus: Dataset, fraction: float, seed: int,
                       entity_types: Optional[Sequence[str]] = None) -> EntityDictionary:
    """A dictionary holding round(fraction * n) of the n distinct names of every type in corpus."""
    Validator.validate_probability(fraction, "fraction")
    rng = derive_rng(seed, STREAM_SYNTHETIC_DICTIONARY)
    surfaces = _surfaces_by_type(corpus)
    dictionary = EntityDictionary()
    for entity_type in entity_types or ENTITY_TYPES:
        names = surfaces.get(entity_type, [])
        keep = sorted(rng.choice(len(names), size=int(round(fraction * len(names))), replace=False))
        for k in keep:
            dictionary.add(names[k], entity_type)
    return dictionary


def synthetic_raw_and_dictionary(n_sentences: int, seed: int, first_id: int = 0,
                                 fraction: float = 0.6) -> Tuple[List[Sentence], EntityDictionary, Dataset]:
    """
    Raw sentences, a partial entity dictionary, and the hidden gold annotations.

    Distant supervision of the raw sentences with the dictionary misses every
    entity whose name is not in it.
    """
    gold = generate_synthetic_corpus(n_sentences, seed, first_id)
    return list(gold.sentences), partial_dictionary(gold, fraction, seed), gold


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.1.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-13"
__description__ = "Templated synthetic NER corpus with held-out names"
