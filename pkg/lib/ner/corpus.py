"""
Corpus Module for the Span NER Engine

Corpus data model, BIO ingestion/emission, span enumeration, negative
sampling, and construction of noisy training sets:

- parse_bio / format_bio: `token<TAB>tag` documents with blank-line separators
- spans_from_bio / bio_from_spans: tag sequence <-> gold span conversion
- enumerate_spans / negative_sample: candidate spans and sampled non-entities
- build_entity_dictionary / distant_supervise: dictionary-based annotation
- corrupt_by_rate: controlled deletion of gold entities

All operations are pure functions of their inputs plus an explicit seed.
Dataset values are immutable after construction.

Author: SpanNER Team
Date: 2025-02-04
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from .constants import (
    BIO_BEGIN,
    BIO_INSIDE,
    BIO_OUTSIDE,
    NEG_SAMPLE_CEIL_SLACK,
    NON_ENTITY_LABEL,
)
from .logging_conventions import LogModules, log_debug, log_warning
from .random_streams import SeedLike
from .validation import BioFormatError, ContractViolation, Validator

logger = logging.getLogger(__name__)


# ============================================================================
# Domain Types
# ============================================================================

class Provenance(str, Enum):
    """Where the annotations of a dataset came from."""
    WELL_ANNOTATED = "well_annotated"
    DISTANTLY_SUPERVISED = "distantly_supervised"
    CORRUPTED = "corrupted"


# Noisiest provenance wins when datasets are merged
_PROVENANCE_RANK = {
    Provenance.WELL_ANNOTATED: 0,
    Provenance.DISTANTLY_SUPERVISED: 1,
    Provenance.CORRUPTED: 2,
}


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence with a unique non-negative id."""
    id: int
    tokens: Tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.id < 0:
            raise ContractViolation("sentence id must be non-negative", field="id", value=self.id)
        if len(self.tokens) == 0:
            raise ContractViolation("sentence must have at least one token", field="tokens", value=self.id)
        if any(tok == "" for tok in self.tokens):
            raise ContractViolation("tokens must be non-empty strings", field="tokens", value=self.id)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class GoldSpan:
    """Inclusive token range [start, end] carrying an entity label name."""
    start: int
    end: int
    label: str

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "GoldSpan") -> bool:
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class SpanInstance:
    """One training / inference unit: a span of a sentence and its label name."""
    sentence_id: int
    start: int
    end: int
    label: str


@dataclass(frozen=True)
class LabelSet:
    """
    Ordered label names with the index of the non-entity label.

    Label ids used by the model are positions in `labels`. Corpus-level label
    sets may hold only the non-entity label (an all-O document); models
    require at least one entity label.
    """
    labels: Tuple[str, ...]
    non_entity_index: int

    def __post_init__(self):
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ContractViolation("label names must be unique", field="labels", value=self.labels)
        if not 0 <= self.non_entity_index < len(self.labels):
            raise ContractViolation("non-entity index out of range", field="non_entity_index",
                                    value=self.non_entity_index)
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.labels)})

    @classmethod
    def from_entity_types(cls, entity_types: Iterable[str]) -> "LabelSet":
        """Sorted entity types followed by the non-entity label."""
        types = sorted(set(entity_types) - {NON_ENTITY_LABEL})
        return cls(tuple(types) + (NON_ENTITY_LABEL,), len(types))

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ContractViolation(f"unknown label '{name}'", field="label", value=name)

    @property
    def non_entity(self) -> str:
        return self.labels[self.non_entity_index]

    @property
    def entity_labels(self) -> Tuple[str, ...]:
        return tuple(l for i, l in enumerate(self.labels) if i != self.non_entity_index)

    def union(self, other: "LabelSet") -> "LabelSet":
        return LabelSet.from_entity_types(self.entity_labels + other.entity_labels)


@dataclass
class BioReport:
    """Leniency warnings collected while reading BIO tags."""
    orphan_continuations: int = 0
    orphan_positions: List[Tuple[int, int]] = field(default_factory=list)  # (sentence id, token index)

    def record_orphan(self, sentence_id: int, position: int):
        self.orphan_continuations += 1
        self.orphan_positions.append((sentence_id, position))


@dataclass(frozen=True)
class Dataset:
    """Sentences with per-sentence gold spans, a label set and a provenance tag."""
    sentences: Tuple[Sentence, ...]
    annotations: Tuple[Tuple[GoldSpan, ...], ...]
    label_set: LabelSet
    provenance: Provenance = Provenance.WELL_ANNOTATED
    bio_report: Optional[BioReport] = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.sentences, tuple):
            object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "annotations", tuple(tuple(sorted(a)) for a in self.annotations))
        if len(self.sentences) != len(self.annotations):
            raise ContractViolation("one annotation list per sentence is required",
                                    field="annotations", value=len(self.annotations))
        ids = [s.id for s in self.sentences]
        if len(set(ids)) != len(ids):
            raise ContractViolation("sentence ids must be unique", field="sentences")
        for sentence, spans in zip(self.sentences, self.annotations):
            _check_spans(len(sentence), spans, self.label_set, sentence.id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Tuple[Sentence, Tuple[GoldSpan, ...]]]:
        return iter(zip(self.sentences, self.annotations))

    @property
    def num_spans(self) -> int:
        return sum(len(a) for a in self.annotations)

    def with_annotations(self, annotations: Sequence[Sequence[GoldSpan]],
                         provenance: Optional[Provenance] = None) -> "Dataset":
        return replace(self, annotations=tuple(tuple(a) for a in annotations),
                       provenance=provenance or self.provenance, bio_report=None)

    def with_label_set(self, label_set: LabelSet) -> "Dataset":
        """Same annotations under another label set (every used label must exist in it)."""
        return replace(self, label_set=label_set)


def _check_spans(n: int, spans: Sequence[GoldSpan], label_set: LabelSet, sentence_id: int):
    previous = None
    for span in spans:
        if not 0 <= span.start <= span.end < n:
            raise ContractViolation(f"span ({span.start},{span.end}) outside sentence of length {n}",
                                    field="annotations", value=sentence_id)
        if span.label not in label_set or span.label == label_set.non_entity:
            raise ContractViolation(f"span label '{span.label}' is not an entity label",
                                    field="annotations", value=sentence_id)
        if previous is not None and previous.end >= span.start:
            raise ContractViolation("gold spans overlap", field="annotations", value=sentence_id)
        previous = span


# ============================================================================
# BIO Tags
# ============================================================================

def split_tag(tag: str) -> Tuple[str, Optional[str]]:
    """
    Split a BIO tag into prefix and entity type.

    B-PER -> ("B", "PER"); O -> ("O", None)
    """
    if tag == BIO_OUTSIDE:
        return BIO_OUTSIDE, None
    prefix, sep, entity_type = tag.partition("-")
    if sep != "-" or prefix not in (BIO_BEGIN, BIO_INSIDE) or entity_type == "":
        raise BioFormatError(f"invalid BIO tag '{tag}'")
    return prefix, entity_type


def spans_from_bio(tags: Sequence[str], report: Optional[BioReport] = None,
                   sentence_id: int = 0) -> List[GoldSpan]:
    """
    Maximal B/I runs of equal type become spans, sorted by start.

    An I-X that does not continue a B-X/I-X run starts a new span (conlleval
    convention) and is counted in `report`.
    """
    spans: List[GoldSpan] = []
    start: Optional[int] = None
    current: Optional[str] = None

    for k, tag in enumerate(tags):
        prefix, entity_type = split_tag(tag)
        if prefix == BIO_OUTSIDE:
            if current is not None:
                spans.append(GoldSpan(start, k - 1, current))
            start, current = None, None
            continue
        if prefix == BIO_BEGIN or entity_type != current:
            if prefix == BIO_INSIDE and report is not None:
                report.record_orphan(sentence_id, k)
            if current is not None:
                spans.append(GoldSpan(start, k - 1, current))
            start, current = k, entity_type

    if current is not None:
        spans.append(GoldSpan(start, len(tags) - 1, current))
    return spans


def bio_from_spans(n: int, spans: Sequence[GoldSpan]) -> List[str]:
    """Tag sequence of length n for pairwise non-overlapping spans."""
    tags = [BIO_OUTSIDE] * n
    previous = None
    for span in sorted(spans):
        if not 0 <= span.start <= span.end < n:
            raise ContractViolation(f"span ({span.start},{span.end}) outside length {n}", field="spans")
        if previous is not None and previous.end >= span.start:
            raise ContractViolation(f"spans {previous} and {span} overlap", field="spans")
        tags[span.start] = f"{BIO_BEGIN}-{span.label}"
        for k in range(span.start + 1, span.end + 1):
            tags[k] = f"{BIO_INSIDE}-{span.label}"
        previous = span
    return tags


# ============================================================================
# BIO Documents
# ============================================================================

def _read_blocks(text: str, columns: Tuple[int, ...]) -> List[List[Tuple[int, List[str]]]]:
    """Blank-line separated blocks of (line number, fields); field count must be in `columns`."""
    blocks: List[List[Tuple[int, List[str]]]] = []
    current: List[Tuple[int, List[str]]] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if line.strip() == "":
            if current:
                blocks.append(current)
                current = []
            continue
        fields = line.split("\t")
        if len(fields) not in columns:
            raise BioFormatError(f"expected {' or '.join(map(str, columns))} tab-separated fields, "
                                 f"got {len(fields)}", line_no)
        if fields[0] == "":
            raise BioFormatError("empty token", line_no)
        current.append((line_no, fields))
    if current:
        blocks.append(current)
    return blocks


def _validated_tags(block, column: int) -> List[str]:
    tags = []
    for line_no, fields in block:
        tag = fields[column]
        try:
            split_tag(tag)
        except BioFormatError as e:
            raise BioFormatError(str(e), line_no)
        tags.append(tag)
    return tags


def _resolve_label_set(annotations, label_set: Optional[LabelSet]) -> LabelSet:
    if label_set is not None:
        return label_set
    return LabelSet.from_entity_types(span.label for spans in annotations for span in spans)


def parse_bio(text: str, label_set: Optional[LabelSet] = None, first_id: int = 0,
              provenance: Provenance = Provenance.WELL_ANNOTATED) -> Dataset:
    """
    Parse a `token<TAB>tag` document into a Dataset.

    Sentence ids are assigned consecutively from `first_id`. Without an
    explicit label set, the label set is the union of the seen entity types
    plus "O".

    Raises:
        BioFormatError: wrong field count or invalid tag, with the line number
    """
    report = BioReport()
    sentences, annotations = [], []
    for offset, block in enumerate(_read_blocks(text, (2,))):
        sentence = Sentence(first_id + offset, tuple(fields[0] for _, fields in block))
        tags = _validated_tags(block, 1)
        sentences.append(sentence)
        annotations.append(spans_from_bio(tags, report, sentence.id))

    if report.orphan_continuations:
        log_warning(logger, LogModules.CORPUS, "Orphan I- tags started new spans",
                    count=report.orphan_continuations)

    return Dataset(tuple(sentences), tuple(tuple(a) for a in annotations),
                   _resolve_label_set(annotations, label_set), provenance, report)


def parse_bio_triples(text: str, label_set: Optional[LabelSet] = None,
                      first_id: int = 0) -> Tuple[Dataset, Dataset]:
    """Parse a `token<TAB>gold<TAB>pred` document into (gold, predicted) datasets."""
    gold_report, pred_report = BioReport(), BioReport()
    sentences, gold, pred = [], [], []
    for offset, block in enumerate(_read_blocks(text, (3,))):
        sentence = Sentence(first_id + offset, tuple(fields[0] for _, fields in block))
        sentences.append(sentence)
        gold.append(spans_from_bio(_validated_tags(block, 1), gold_report, sentence.id))
        pred.append(spans_from_bio(_validated_tags(block, 2), pred_report, sentence.id))

    labels = _resolve_label_set(gold + pred, label_set)
    return (Dataset(tuple(sentences), tuple(map(tuple, gold)), labels, Provenance.WELL_ANNOTATED, gold_report),
            Dataset(tuple(sentences), tuple(map(tuple, pred)), labels, Provenance.WELL_ANNOTATED, pred_report))


def parse_tokens(text: str, first_id: int = 0) -> List[Sentence]:
    """Raw sentences from a one-token-per-line document; a tag column, if present, is ignored."""
    return [Sentence(first_id + offset, tuple(fields[0] for _, fields in block))
            for offset, block in enumerate(_read_blocks(text, (1, 2)))]


def format_tokens(sentences: Sequence[Sentence]) -> str:
    """One token per line, one blank line between sentences."""
    return "\n".join("".join(f"{tok}\n" for tok in s.tokens) for s in sentences)


def format_bio(dataset: Dataset) -> str:
    """Inverse of parse_bio: `token<TAB>tag` lines, one blank line between sentences."""
    blocks = []
    for sentence, spans in dataset:
        tags = bio_from_spans(len(sentence), spans)
        blocks.append("".join(f"{tok}\t{tag}\n" for tok, tag in zip(sentence.tokens, tags)))
    return "\n".join(blocks)


def format_bio_triples(gold: Dataset, predicted: Sequence[Sequence[GoldSpan]]) -> str:
    """`token<TAB>gold<TAB>pred` lines for the external conlleval script."""
    if len(predicted) != len(gold):
        raise ContractViolation("one prediction list per sentence is required", field="predicted")
    blocks = []
    for (sentence, spans), pred_spans in zip(gold, predicted):
        gold_tags = bio_from_spans(len(sentence), spans)
        pred_tags = bio_from_spans(len(sentence), pred_spans)
        blocks.append("".join(f"{tok}\t{g}\t{p}\n"
                              for tok, g, p in zip(sentence.tokens, gold_tags, pred_tags)))
    return "\n".join(blocks)


def merge_datasets(first: Dataset, second: Dataset) -> Dataset:
    """Concatenate two datasets with disjoint sentence ids (e.g. the clean set plus a noisy set)."""
    ids = {s.id for s in first.sentences}
    if any(s.id in ids for s in second.sentences):
        raise ContractViolation("merged datasets must have disjoint sentence ids", field="sentences")
    provenance = max(first.provenance, second.provenance, key=_PROVENANCE_RANK.__getitem__)
    return Dataset(first.sentences + second.sentences,
                   first.annotations + second.annotations,
                   first.label_set.union(second.label_set),
                   provenance)


def dataset_statistics(dataset: Dataset) -> Dict[str, object]:
    """Sentence, token and per-label span counts."""
    per_label: Dict[str, int] = {label: 0 for label in dataset.label_set.entity_labels}
    for spans in dataset.annotations:
        for span in spans:
            per_label[span.label] += 1
    return {
        "sentences": len(dataset),
        "tokens": sum(len(s) for s in dataset.sentences),
        "spans": dataset.num_spans,
        "spans_per_label": per_label,
        "provenance": dataset.provenance.value,
    }


# ============================================================================
# Span Enumeration and Negative Sampling
# ============================================================================

def enumerate_spans(sentence, max_len: int) -> List[Tuple[int, int]]:
    """All (i, j) with i <= j and j - i + 1 <= max_len, in lexicographic order."""
    if max_len < 1:
        raise ContractViolation("max_len must be >= 1", field="max_len", value=max_len)
    n = sentence if isinstance(sentence, int) else len(sentence)
    return [(i, j) for i in range(n) for j in range(i, min(n, i + max_len))]


def _negative_pool(sentence: Sentence, gold: Sequence[GoldSpan], max_len: int) -> List[Tuple[int, int]]:
    gold_bounds: Set[Tuple[int, int]] = {(s.start, s.end) for s in gold}
    return [ij for ij in enumerate_spans(sentence, max_len) if ij not in gold_bounds]


def negative_sample_count(n: int, ratio: float) -> int:
    """ceil(ratio * n), guarded against float noise such as 0.35 * 20 = 7.000000000000001."""
    return int(math.ceil(ratio * n - NEG_SAMPLE_CEIL_SLACK))


def negative_sample(sentence: Sentence, gold: Sequence[GoldSpan], ratio: float, max_len: int,
                    rng_seed: SeedLike) -> List[SpanInstance]:
    """
    Uniform sample without replacement of non-gold spans, labeled non-entity.

    Sample size is min(ceil(ratio * n), pool size); output is in lexicographic
    span order and is a pure function of the inputs and the seed.
    """
    Validator.validate_open_unit(ratio, "neg_ratio")
    pool = _negative_pool(sentence, gold, max_len)
    k = min(negative_sample_count(len(sentence), ratio), len(pool))
    if k == 0:
        return []
    rng = np.random.default_rng(rng_seed)
    chosen = np.sort(rng.choice(len(pool), size=k, replace=False))
    return [SpanInstance(sentence.id, pool[c][0], pool[c][1], NON_ENTITY_LABEL) for c in chosen]


def all_negatives(sentence: Sentence, gold: Sequence[GoldSpan], max_len: int) -> List[SpanInstance]:
    """Every non-gold span up to max_len, labeled non-entity (negative sampling disabled)."""
    return [SpanInstance(sentence.id, i, j, NON_ENTITY_LABEL) for i, j in _negative_pool(sentence, gold, max_len)]


# ============================================================================
# Entity Dictionary and Distant Supervision
# ============================================================================

@dataclass
class EntityDictionary:
    """Surface token sequence -> entity label; first occurrence wins on collisions."""
    entries: Dict[Tuple[str, ...], str] = field(default_factory=dict)
    collisions: int = 0

    def add(self, surface: Sequence[str], label: str) -> bool:
        """Add an entry; returns False for duplicates and collisions."""
        key = tuple(surface)
        if len(key) == 0 or any(tok == "" for tok in key):
            raise ContractViolation("dictionary surface forms must be non-empty", field="surface")
        existing = self.entries.get(key)
        if existing is not None:
            if existing != label:
                self.collisions += 1
            return False
        self.entries[key] = label
        return True

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, surface) -> bool:
        return tuple(surface) in self.entries

    def lookup(self, surface: Sequence[str]) -> Optional[str]:
        return self.entries.get(tuple(surface))

    @property
    def max_len(self) -> int:
        return max((len(k) for k in self.entries), default=0)

    @property
    def labels(self) -> Set[str]:
        return set(self.entries.values())


def build_entity_dictionary(dataset: Dataset) -> EntityDictionary:
    """One entry per distinct gold surface form, in corpus order."""
    dictionary = EntityDictionary()
    for sentence, spans in dataset:
        for span in spans:
            dictionary.add(sentence.tokens[span.start:span.end + 1], span.label)
    if dictionary.collisions:
        log_warning(logger, LogModules.CORPUS, "Surface forms with conflicting labels kept first label",
                    collisions=dictionary.collisions)
    log_debug(logger, LogModules.CORPUS, "Built entity dictionary", entries=len(dictionary))
    return dictionary


def load_entity_dictionary(text: str) -> EntityDictionary:
    """Parse `surface form<TAB>label` lines; tokens of the surface form are space separated."""
    dictionary = EntityDictionary()
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if line.strip() == "":
            continue
        fields = line.split("\t")
        if len(fields) != 2 or fields[1] == "":
            raise BioFormatError("expected `surface<TAB>label`", line_no)
        surface = fields[0].split(" ")
        if any(tok == "" for tok in surface):
            raise BioFormatError("surface tokens must be separated by single spaces", line_no)
        dictionary.add(surface, fields[1])
    if dictionary.collisions:
        log_warning(logger, LogModules.CORPUS, "Dictionary file has conflicting labels",
                    collisions=dictionary.collisions)
    return dictionary


def format_entity_dictionary(dictionary: EntityDictionary) -> str:
    return "".join(f"{' '.join(surface)}\t{label}\n" for surface, label in dictionary.entries.items())


def distant_supervise(raw: Sequence[Sentence], dictionary: EntityDictionary,
                      label_set: Optional[LabelSet] = None) -> Dataset:
    """
    Annotate raw sentences by greedy longest-match, left-to-right exact matching.

    Sentences without matches are kept with no spans.
    """
    if len(dictionary) == 0:
        log_warning(logger, LogModules.CORPUS, "Empty entity dictionary; every sentence stays unannotated")
    longest = dictionary.max_len
    annotations = []
    for sentence in raw:
        spans = []
        k, n = 0, len(sentence)
        while k < n:
            matched = None
            for length in range(min(longest, n - k), 0, -1):
                label = dictionary.lookup(sentence.tokens[k:k + length])
                if label is not None:
                    matched = GoldSpan(k, k + length - 1, label)
                    break
            if matched is None:
                k += 1
            else:
                spans.append(matched)
                k = matched.end + 1
        annotations.append(tuple(spans))

    if label_set is None:
        label_set = LabelSet.from_entity_types(dictionary.labels)
    return Dataset(tuple(raw), tuple(annotations), label_set, Provenance.DISTANTLY_SUPERVISED)


def corrupt_by_rate(dataset: Dataset, drop_prob: float, rng_seed: SeedLike) -> Dataset:
    """Delete each gold span independently with probability drop_prob."""
    Validator.validate_probability(drop_prob, "drop_prob")
    rng = np.random.default_rng(rng_seed)
    kept = []
    for spans in dataset.annotations:
        draws = rng.random(len(spans))
        kept.append(tuple(span for span, u in zip(spans, draws) if not u < drop_prob))
    return dataset.with_annotations(kept, Provenance.CORRUPTED)


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-04"
__description__ = "Corpus model, BIO conversion, negative sampling and noisy-set construction"
