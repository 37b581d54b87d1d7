"""
Retrieval Augmented Inference Module for the Span NER Engine

After training, every label gets a centroid: the mean projected
representation of its training instances (gold entity spans, plus seeded
negative samples for the non-entity label). At inference a span's
representation is compared with each centroid by cosine similarity:

    o_RA = softmax(sim), then o_RA[v] := 0   (no renormalization)
    p_final = (1 - α) o_model + α o_RA

Labels without a centroid are excluded from the softmax support.

Author: SpanNER Team
Date: 2025-02-08
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .binary_format import BinaryReader, BinaryWriter, PathLike
from .constants import CENTROID_MAGIC, STREAM_CENTROIDS
from .contrastive import normalize_rows
from .corpus import Dataset, LabelSet, all_negatives, negative_sample
from .diagnostics import NumericCounters
from .logging_conventions import LogModules, LoggedOperation, log_warning
from .random_streams import derive_rng
from .span_model import LabelDistribution, ModelParams, span_distributions
from .validation import BinaryFormatError, ContractViolation, Validator

logger = logging.getLogger(__name__)


# ============================================================================
# Centroid Table
# ============================================================================

@dataclass
class CentroidTable:
    """
    Per-label centroid r_l with the instance count N_l behind it.

    Rows of labels with no instances are zero and flagged absent.
    """
    label_set: LabelSet
    centroids: np.ndarray  # (L, d_r)
    counts: np.ndarray  # (L,) int64, 0 = no entry

    def __post_init__(self):
        L = len(self.label_set)
        if self.centroids.ndim != 2 or self.centroids.shape[0] != L or self.counts.shape != (L,):
            raise ContractViolation("centroid table needs one row and one count per label",
                                    field="centroids", value=self.centroids.shape)
        Validator.validate_finite(self.centroids, "centroids")

    @property
    def present(self) -> np.ndarray:
        return self.counts > 0

    @property
    def non_entity_index(self) -> int:
        return self.label_set.non_entity_index

    @property
    def projection_dim(self) -> int:
        return self.centroids.shape[1]

    @property
    def missing_labels(self) -> List[str]:
        """Coverage report: labels with no training instance."""
        return [name for name, ok in zip(self.label_set.labels, self.present) if not ok]

    @property
    def has_entity_centroid(self) -> bool:
        mask = self.present.copy()
        mask[self.non_entity_index] = False
        return bool(mask.any())

    def centroid(self, label: str) -> Optional[np.ndarray]:
        k = self.label_set.index(label)
        return self.centroids[k] if self.counts[k] > 0 else None


def centroid_table_from_reps(R: np.ndarray, labels: np.ndarray, label_set: LabelSet) -> CentroidTable:
    """Arithmetic mean of the rows of R per label id, summed in row order."""
    R = np.asarray(R, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    L = len(label_set)
    d_r = R.shape[1] if R.ndim == 2 else 0
    centroids = np.zeros((L, d_r))
    counts = np.zeros(L, dtype=np.int64)
    for k in range(L):
        rows = R[labels == k]
        counts[k] = len(rows)
        if len(rows):
            centroids[k] = rows.sum(axis=0) / len(rows)
    return CentroidTable(label_set, centroids, counts)


def centroid_instances(dataset: Dataset, max_span_len: int, neg_ratio: float, seed: int,
                       negative_sampling: bool = True) -> List[List[Tuple[int, int, str]]]:
    """Per sentence (i, j, label): gold spans then negatives from the "centroids" stream."""
    per_sentence = []
    for sentence, gold in dataset:
        items = [(s.start, s.end, s.label) for s in gold]
        if negative_sampling:
            negatives = negative_sample(sentence, gold, neg_ratio, max_span_len,
                                        derive_rng(seed, STREAM_CENTROIDS, sentence.id))
        else:
            negatives = all_negatives(sentence, gold, max_span_len)
        items.extend((n.start, n.end, n.label) for n in negatives)
        per_sentence.append(items)
    return per_sentence


def build_centroid_table(params: ModelParams, dataset: Dataset, max_span_len: int, neg_ratio: float,
                         seed: int, negative_sampling: bool = True, features=None) -> CentroidTable:
    """
    Centroid table from the final parameters in inference mode (no dropout).

    A label with zero instances gets no entry and is logged as missing.
    """
    label_set = params.label_set
    encoder = params.make_encoder(features)
    with LoggedOperation(logger, LogModules.RAI, "centroid table build", level=logging.DEBUG):
        reps, labels = [], []
        for sentence, items in zip(dataset.sentences,
                                   centroid_instances(dataset, max_span_len, neg_ratio, seed, negative_sampling)):
            if not items:
                continue
            H = encoder.encode(sentence)
            R, _ = span_distributions(H, [(i, j) for i, j, _ in items], params.scoring)
            reps.append(R)
            labels.extend(label_set.index(name) for _, _, name in items)
        R = np.concatenate(reps) if reps else np.zeros((0, params.projection_dim))
        table = centroid_table_from_reps(R, np.asarray(labels, dtype=np.int64), label_set)

    if table.missing_labels:
        log_warning(logger, LogModules.RAI, "Labels without training instances have no centroid",
                    labels=",".join(table.missing_labels))
    return table


# ============================================================================
# Retrieval Distribution and Interpolation
# ============================================================================

def ra_distributions(R: np.ndarray, table: CentroidTable,
                     counters: Optional[NumericCounters] = None) -> np.ndarray:
    """
    Row-wise o_RA for a stack of projected representations.

    Without any entity centroid every row is all zeros.
    """
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    L = len(table.label_set)
    out = np.zeros((R.shape[0], L))
    if not table.has_entity_centroid:
        if counters is not None:
            counters.missing_centroids += 1
        return out
    present = table.present
    Ur, _ = normalize_rows(R, counters)
    Uc, _ = normalize_rows(table.centroids[present], counters)
    sims = Ur @ Uc.T
    sims = sims - sims.max(axis=1, keepdims=True)
    expz = np.exp(sims)
    out[:, present] = expz / expz.sum(axis=1, keepdims=True)
    out[:, table.non_entity_index] = 0.0
    return out


def ra_distribution(r: np.ndarray, table: CentroidTable,
                    counters: Optional[NumericCounters] = None) -> LabelDistribution:
    """
    o_RA for one representation.

    Example:
        >>> ra_distribution(r, table)  # r on centroid 0, others orthogonal, v = 2
        array([0.57611688, 0.21194156, 0.        ])
    """
    r = Validator.validate_vector(r, "r", dim=table.projection_dim)
    if not table.has_entity_centroid:
        log_warning(logger, LogModules.RAI, "Centroid table has no entity label; retrieval distribution is zero")
    return ra_distributions(r[None, :], table, counters)[0]


def interpolate(o_model: np.ndarray, o_ra: np.ndarray, alpha: float) -> np.ndarray:
    """p_final = (1 - α) o_model + α o_RA, componentwise, without renormalization."""
    alpha = Validator.validate_probability(alpha, "alpha")
    o_model = np.asarray(o_model, dtype=np.float64)
    o_ra = np.asarray(o_ra, dtype=np.float64)
    if o_model.shape != o_ra.shape:
        raise ContractViolation("distributions must have equal shape", field="o_ra",
                                value=(o_model.shape, o_ra.shape))
    return (1.0 - alpha) * o_model + alpha * o_ra


def final_distributions(P: np.ndarray, R: np.ndarray, table: Optional[CentroidTable], alpha: float,
                        counters: Optional[NumericCounters] = None) -> np.ndarray:
    """Model distributions with retrieval mixed in; α = 0 or no table returns P itself."""
    if table is None or alpha == 0.0:
        return P
    return interpolate(P, ra_distributions(R, table, counters), alpha)


# ============================================================================
# Serialization
# ============================================================================

def save_centroid_table(path: PathLike, table: CentroidTable):
    """
    Layout: magic, version, u32 L, L label names, u32 v, u32 d_r, then per
    label u8 present, u32 count, d_r float32 (present labels only).
    """
    writer = BinaryWriter(CENTROID_MAGIC)
    writer.u32(len(table.label_set))
    for name in table.label_set.labels:
        writer.text(name)
    writer.u32(table.non_entity_index)
    writer.u32(table.projection_dim)
    for k in range(len(table.label_set)):
        present = table.counts[k] > 0
        writer.u8(1 if present else 0)
        writer.u32(int(table.counts[k]))
        if present:
            writer.floats(table.centroids[k])
    writer.write(path)


def load_centroid_table(path: PathLike) -> CentroidTable:
    reader = BinaryReader.open(path, CENTROID_MAGIC)
    names = [reader.text() for _ in range(reader.u32())]
    v = reader.u32()
    d_r = reader.u32()
    try:
        label_set = LabelSet(tuple(names), v)
    except ContractViolation as e:
        raise BinaryFormatError(f"{path}: invalid label set ({e})")
    centroids = np.zeros((len(names), d_r))
    counts = np.zeros(len(names), dtype=np.int64)
    for k in range(len(names)):
        present = reader.u8()
        counts[k] = reader.u32()
        if bool(present) != (counts[k] > 0):
            raise BinaryFormatError(f"{path}: label {names[k]} presence flag disagrees with count")
        if present:
            centroids[k] = reader.floats(d_r)
    reader.expect_end()
    return CentroidTable(label_set, centroids, counts)


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-08"
__description__ = "Centroid table and retrieval-augmented label distribution"
