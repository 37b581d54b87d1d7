"""
Evaluation Module for the Span NER Engine

Span decoding to BIO and phrase-level scoring with conlleval semantics:

- decode: p_final for every enumerated span, greedy non-overlap resolution
- score / score_spans: exact-match precision, recall and F1 per type and overall
- format_score_report: conlleval-style text report

A predicted phrase is correct iff its boundaries and type equal a gold
phrase. Because spans_from_bio follows conlleval chunk boundaries (orphan I-
starts a phrase, B-X B-X is two phrases, a type change starts a phrase),
exact span matching reproduces conlleval counts.

Author: SpanNER Team
Date: 2025-02-10
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import (
    Dataset,
    GoldSpan,
    LabelSet,
    Sentence,
    enumerate_spans,
    parse_bio,
    parse_bio_triples,
)
from .diagnostics import NumericCounters
from .logging_conventions import LogModules, log_debug
from .rai import CentroidTable, final_distributions
from .span_model import ModelParams, span_distributions
from .validation import AlignmentError

logger = logging.getLogger(__name__)


# ============================================================================
# Prediction Types
# ============================================================================

@dataclass(frozen=True, order=True)
class PredictedSpan:
    start: int
    end: int
    label: str
    probability: float = field(compare=False)

    def overlaps(self, other) -> bool:
        return self.start <= other.end and other.start <= self.end

    def as_gold(self) -> GoldSpan:
        return GoldSpan(self.start, self.end, self.label)


PredictionSet = List[List[PredictedSpan]]  # per sentence, sorted by start


# ============================================================================
# Decoding
# ============================================================================

def span_candidates(spans: Sequence[Tuple[int, int]], p_final: np.ndarray,
                    label_set: LabelSet) -> List[PredictedSpan]:
    """Spans whose argmax label is an entity label, scored by that label's probability."""
    if len(spans) == 0:
        return []
    best = np.argmax(p_final, axis=1)
    candidates = []
    for (i, j), k, row in zip(spans, best, p_final):
        if k != label_set.non_entity_index:
            candidates.append(PredictedSpan(i, j, label_set.labels[k], float(row[k])))
    return candidates


def resolve_overlaps(candidates: Iterable[PredictedSpan]) -> List[PredictedSpan]:
    """
    Greedy selection by (score desc, start asc, end asc); a candidate is kept
    iff it overlaps no kept span. Output sorted by start.
    """
    ordered = sorted(candidates, key=lambda c: (-c.probability, c.start, c.end))
    accepted: List[PredictedSpan] = []
    for candidate in ordered:
        if not any(candidate.overlaps(kept) for kept in accepted):
            accepted.append(candidate)
    return sorted(accepted)


def decode(sentence: Sentence, params: ModelParams, table: Optional[CentroidTable], alpha: float,
           max_span_len: int, encoder=None, counters: Optional[NumericCounters] = None) -> List[PredictedSpan]:
    """
    Predicted entity spans of one sentence.

    table=None (or α = 0) decodes from the model distribution alone.

    Example:
        >>> spans = decode(sentence, params, table, alpha=0.5, max_span_len=10)
        >>> bio_from_spans(len(sentence), [s.as_gold() for s in spans])
    """
    if encoder is None:
        encoder = params.make_encoder()
    spans = enumerate_spans(sentence, max_span_len)
    R, P = span_distributions(encoder.encode(sentence), spans, params.scoring)
    p_final = final_distributions(P, R, table, alpha, counters)
    return resolve_overlaps(span_candidates(spans, p_final, params.label_set))


def predict_dataset(params: ModelParams, table: Optional[CentroidTable], dataset: Dataset, alpha: float,
                    max_span_len: int, features=None) -> PredictionSet:
    encoder = params.make_encoder(features)
    counters = NumericCounters()
    predictions = [decode(s, params, table, alpha, max_span_len, encoder, counters) for s in dataset.sentences]
    counters.report(logger, LogModules.EVAL, "Decoding")
    return predictions


# ============================================================================
# Scoring
# ============================================================================

@dataclass
class PhraseCounts:
    gold: int = 0
    predicted: int = 0
    correct: int = 0

    @property
    def precision(self) -> float:
        return 100.0 * self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class ScoreReport:
    """Per-type and overall phrase counts; P/R/F1 are percentages."""
    overall: PhraseCounts = field(default_factory=PhraseCounts)
    per_type: Dict[str, PhraseCounts] = field(default_factory=dict)
    tokens: int = 0

    @property
    def precision(self) -> float:
        return round(self.overall.precision, 2)

    @property
    def recall(self) -> float:
        return round(self.overall.recall, 2)

    @property
    def f1(self) -> float:
        return round(self.overall.f1, 2)

    def as_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "gold": self.overall.gold, "predicted": self.overall.predicted, "correct": self.overall.correct,
            "per_type": {t: {"precision": round(c.precision, 2), "recall": round(c.recall, 2),
                             "f1": round(c.f1, 2), "gold": c.gold, "predicted": c.predicted,
                             "correct": c.correct}
                         for t, c in sorted(self.per_type.items())},
        }


def score_spans(gold: Sequence[Sequence[GoldSpan]], predicted: Sequence[Sequence], tokens: int = 0) -> ScoreReport:
    """Exact-match phrase scoring of per-sentence span lists (PredictedSpan or GoldSpan)."""
    if len(gold) != len(predicted):
        raise AlignmentError(f"{len(gold)} gold sentences vs {len(predicted)} predicted")
    report = ScoreReport(tokens=tokens)
    for gold_spans, pred_spans in zip(gold, predicted):
        gold_set = {(s.start, s.end, s.label) for s in gold_spans}
        pred_set = {(s.start, s.end, s.label) for s in pred_spans}
        for _, _, label in gold_set:
            report.per_type.setdefault(label, PhraseCounts()).gold += 1
        for _, _, label in pred_set:
            report.per_type.setdefault(label, PhraseCounts()).predicted += 1
        for _, _, label in gold_set & pred_set:
            report.per_type[label].correct += 1
        report.overall.gold += len(gold_set)
        report.overall.predicted += len(pred_set)
        report.overall.correct += len(gold_set & pred_set)
    return report


def check_alignment(pred: Dataset, gold: Dataset):
    """Raise AlignmentError at the first token position where the streams differ."""
    position = 0
    for k, (p_sent, g_sent) in enumerate(zip(pred.sentences, gold.sentences)):
        for p_tok, g_tok in zip(p_sent.tokens, g_sent.tokens):
            if p_tok != g_tok:
                raise AlignmentError(f"token '{p_tok}' vs '{g_tok}' in sentence {k}", position)
            position += 1
        if len(p_sent) != len(g_sent):
            raise AlignmentError(f"sentence {k} has {len(p_sent)} predicted vs {len(g_sent)} gold tokens",
                                 position)
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predicted vs {len(gold)} gold sentences", position)


def score(pred_text: str, gold_text: str) -> ScoreReport:
    """
    Score a predicted BIO document against a gold one.

    Raises:
        AlignmentError: token streams differ
    """
    pred = parse_bio(pred_text)
    gold = parse_bio(gold_text)
    check_alignment(pred, gold)
    return score_spans(gold.annotations, pred.annotations, sum(len(s) for s in gold.sentences))


def score_triples(text: str) -> ScoreReport:
    """Score a `token<TAB>gold<TAB>pred` document."""
    gold, pred = parse_bio_triples(text)
    return score_spans(gold.annotations, pred.annotations, sum(len(s) for s in gold.sentences))


def format_score_report(report: ScoreReport) -> str:
    """conlleval-style summary: totals, overall line, one line per type."""
    o = report.overall
    lines = [
        f"processed {report.tokens} tokens with {o.gold} phrases; found: {o.predicted} phrases; "
        f"correct: {o.correct}.",
        f"overall: precision: {o.precision:6.2f}%; recall: {o.recall:6.2f}%; FB1: {o.f1:6.2f}",
    ]
    for label in sorted(report.per_type):
        c = report.per_type[label]
        lines.append(f"{label:>17}: precision: {c.precision:6.2f}%; recall: {c.recall:6.2f}%; "
                     f"FB1: {c.f1:6.2f}  {c.predicted}")
    return "\n".join(lines) + "\n"


def evaluate(params: ModelParams, table: Optional[CentroidTable], dataset: Dataset, alpha: float,
             max_span_len: int, features=None) -> Tuple[ScoreReport, PredictionSet]:
    """Decode a dataset and score it against its annotations."""
    predictions = predict_dataset(params, table, dataset, alpha, max_span_len, features)
    report = score_spans(dataset.annotations, predictions, sum(len(s) for s in dataset.sentences))
    log_debug(logger, LogModules.EVAL, "Scored dataset", sentences=len(dataset),
              precision=f"{report.precision:.2f}", recall=f"{report.recall:.2f}", f1=f"{report.f1:.2f}")
    return report, predictions


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-10"
__description__ = "Span decoding and conlleval-semantics scoring"
