"""
Span Model Module for the Span NER Engine

Span representation, projection, label scoring and cross-entropy:

    s = h_i ⊕ h_j ⊕ (h_i - h_j) ⊕ (h_i ⊙ h_j)
    r = tanh(W s)
    z = V r,  o = softmax(z)
    loss_ce = Σ -log o[gold]

Single-vector functions (span_rep, project, label_logits, label_dist) are
the reference definitions; the batched forms used in training apply the same
arithmetic row-wise. All arithmetic is float64.

Author: SpanNER Team
Date: 2025-02-06
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .constants import (
    DEFAULT_EMBED_DIM,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_PROJECTION_DIM,
    INIT_SCALE,
    PROB_FLOOR,
    STREAM_INIT,
)
from .corpus import LabelSet, SpanInstance
from .diagnostics import NumericCounters
from .encoder import (
    ENCODER_PRECOMPUTED,
    ENCODER_WINDOW,
    PrecomputedEncoder,
    Vocabulary,
    WindowEncoder,
    WindowEncoderParams,
)
from .random_streams import derive_rng
from .validation import ContractViolation, NumericError, Validator

logger = logging.getLogger(__name__)

LabelDistribution = np.ndarray  # (L,) or (m, L) nonnegative


# ============================================================================
# Parameters
# ============================================================================

@dataclass
class ScoringParams:
    W: np.ndarray  # d_r x 4 d_h
    V: np.ndarray  # L x d_r, row l is v_l

    def __post_init__(self):
        if self.V.ndim != 2 or self.W.ndim != 2 or self.V.shape[1] != self.W.shape[0]:
            raise ContractViolation("V must be L x d_r and W must be d_r x 4 d_h",
                                    field="scoring", value=(self.W.shape, self.V.shape))
        if self.W.shape[1] % 4 != 0:
            raise ContractViolation("W must have 4 d_h columns", field="W", value=self.W.shape)

    @property
    def projection_dim(self) -> int:
        return self.W.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W.shape[1] // 4

    @classmethod
    def initialize(cls, rng: np.random.Generator, num_labels: int, hidden_dim: int,
                   projection_dim: int = DEFAULT_PROJECTION_DIM, scale: float = INIT_SCALE) -> "ScoringParams":
        W = rng.uniform(-scale, scale, size=(projection_dim, 4 * hidden_dim))
        V = rng.uniform(-scale, scale, size=(num_labels, projection_dim))
        return cls(W, V)


@dataclass
class ModelParams:
    """
    Everything a checkpoint holds: encoder parameters (window mode only),
    scoring matrices, the label set and the encoder kind.
    """
    label_set: LabelSet
    scoring: ScoringParams
    encoder: Optional[WindowEncoderParams] = None
    encoder_kind: str = ENCODER_WINDOW

    def __post_init__(self):
        if len(self.label_set) < 2:
            raise ContractViolation("a model needs at least one entity label plus the non-entity label",
                                    field="label_set", value=self.label_set.labels)
        if self.scoring.V.shape[0] != len(self.label_set):
            raise ContractViolation("V must have one row per label", field="V", value=self.scoring.V.shape)
        if self.encoder_kind == ENCODER_WINDOW:
            if self.encoder is None:
                raise ContractViolation("window models need encoder parameters", field="encoder")
            if self.encoder.hidden_dim != self.scoring.hidden_dim:
                raise ContractViolation("encoder d_h does not match W", field="W", value=self.scoring.W.shape)
        elif self.encoder_kind == ENCODER_PRECOMPUTED:
            if self.encoder is not None:
                raise ContractViolation("precomputed models carry no encoder parameters", field="encoder")
        else:
            raise ContractViolation(f"unknown encoder kind '{self.encoder_kind}'", field="encoder_kind")

    @property
    def hidden_dim(self) -> int:
        return self.scoring.hidden_dim

    @property
    def projection_dim(self) -> int:
        return self.scoring.projection_dim

    def named_arrays(self) -> Dict[str, np.ndarray]:
        """Trainable arrays by name, in canonical order; the arrays are the live parameters."""
        arrays = {}
        if self.encoder is not None:
            arrays.update(E=self.encoder.E, U=self.encoder.U, b=self.encoder.b)
        arrays.update(W=self.scoring.W, V=self.scoring.V)
        return arrays

    def copy(self) -> "ModelParams":
        return ModelParams(self.label_set,
                           ScoringParams(self.scoring.W.copy(), self.scoring.V.copy()),
                           self.encoder.copy() if self.encoder is not None else None,
                           self.encoder_kind)

    def make_encoder(self, features: Optional[PrecomputedEncoder] = None):
        """Encoder object for these parameters; precomputed models need the features."""
        if self.encoder_kind == ENCODER_WINDOW:
            return WindowEncoder(self.encoder)
        if features is None:
            raise ContractViolation("a precomputed-feature model needs a features file", field="features")
        if features.hidden_dim != self.hidden_dim:
            raise ContractViolation(f"features have d_h={features.hidden_dim}, model expects {self.hidden_dim}",
                                    field="features")
        return features


def init_model_params(label_set: LabelSet, seed: int, vocab: Optional[Vocabulary] = None,
                      hidden_dim: int = DEFAULT_HIDDEN_DIM, embed_dim: int = DEFAULT_EMBED_DIM,
                      projection_dim: int = DEFAULT_PROJECTION_DIM, scale: float = INIT_SCALE) -> ModelParams:
    """
    Seeded initialization from the "init" stream.

    With a vocabulary the model gets a window encoder (E, U, b drawn before W,
    V); without one it expects precomputed features of width hidden_dim.
    """
    rng = derive_rng(seed, STREAM_INIT)
    if vocab is not None:
        encoder = WindowEncoderParams.initialize(vocab, rng, embed_dim, hidden_dim, scale)
        scoring = ScoringParams.initialize(rng, len(label_set), hidden_dim, projection_dim, scale)
        return ModelParams(label_set, scoring, encoder, ENCODER_WINDOW)
    scoring = ScoringParams.initialize(rng, len(label_set), hidden_dim, projection_dim, scale)
    return ModelParams(label_set, scoring, None, ENCODER_PRECOMPUTED)


# ============================================================================
# Span Representation and Scoring
# ============================================================================

def span_rep(h_i: np.ndarray, h_j: np.ndarray) -> np.ndarray:
    """
    s = h_i ⊕ h_j ⊕ (h_i - h_j) ⊕ (h_i ⊙ h_j).

    Example:
        >>> span_rep(np.array([1., 0.]), np.array([0., 1.]))
        array([ 1.,  0.,  0.,  1.,  1., -1.,  0.,  0.])
    """
    h_i = np.asarray(h_i, dtype=np.float64)
    h_j = np.asarray(h_j, dtype=np.float64)
    if h_i.shape != h_j.shape or h_i.ndim != 1:
        raise ContractViolation("h_i and h_j must be vectors of equal dimension",
                                field="h", value=(h_i.shape, h_j.shape))
    return np.concatenate([h_i, h_j, h_i - h_j, h_i * h_j])


def span_reps(H: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Row-wise span_rep for spans (starts[k], ends[k]) of one hidden sequence."""
    hi, hj = H[starts], H[ends]
    return np.concatenate([hi, hj, hi - hj, hi * hj], axis=-1)


def project(s: np.ndarray, W: np.ndarray) -> np.ndarray:
    """r = tanh(W s); s may be a single vector or a stack of rows."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != W.shape[1]:
        raise ContractViolation(f"span representation has dimension {s.shape[-1]}, W expects {W.shape[1]}",
                                field="s")
    if not np.all(np.isfinite(s)):
        raise NumericError("non-finite span representation", parameter="s")
    return np.tanh(s @ W.T)


def label_logits(r: np.ndarray, V: np.ndarray) -> np.ndarray:
    """z_l = v_l · r."""
    if np.shape(r)[-1] != V.shape[1]:
        raise ContractViolation(f"projected representation has dimension {np.shape(r)[-1]}, "
                                f"V expects {V.shape[1]}", field="r")
    return np.asarray(r) @ V.T


def label_dist(z: np.ndarray) -> LabelDistribution:
    """Softmax over the last axis with the maximum subtracted first."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite logits", parameter="z")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    expz = np.exp(shifted)
    return expz / np.sum(expz, axis=-1, keepdims=True)


# ============================================================================
# Cross Entropy
# ============================================================================

def gold_probabilities(P: np.ndarray, gold: np.ndarray,
                       counters: Optional[NumericCounters] = None) -> Tuple[np.ndarray, np.ndarray]:
    """p(gold) per row, floored at PROB_FLOOR; returns (floored probabilities, clamped mask)."""
    p_gold = P[np.arange(len(gold)), gold]
    clamped = p_gold < PROB_FLOOR
    if counters is not None:
        counters.clamped_probabilities += int(np.count_nonzero(clamped))
    return np.maximum(p_gold, PROB_FLOOR), clamped


def ce_loss_rows(P: np.ndarray, gold: np.ndarray, counters: Optional[NumericCounters] = None) -> float:
    """Σ_rows -log max(P[row, gold[row]], floor)."""
    if len(gold) == 0:
        return 0.0
    p_gold, _ = gold_probabilities(P, gold, counters)
    return float(-np.sum(np.log(p_gold)))


def ce_loss(batch: Sequence[Tuple[SpanInstance, LabelDistribution]], label_set: LabelSet,
            counters: Optional[NumericCounters] = None) -> float:
    """
    Summed cross-entropy of gold labels over a batch of (instance, distribution) pairs.

    Example:
        >>> ce_loss([(inst, np.full(4, 0.25))], labels)  # ln 4
        1.3862943611198906
    """
    if not batch:
        return 0.0
    gold = np.array([label_set.index(inst.label) for inst, _ in batch], dtype=np.int64)
    P = np.stack([np.asarray(p, dtype=np.float64) for _, p in batch])
    return ce_loss_rows(P, gold, counters)


def ce_logit_gradient(P: np.ndarray, gold: np.ndarray, clamped: np.ndarray) -> np.ndarray:
    """dCE/dz = softmax(z) - onehot(gold); clamped rows have a constant loss and zero gradient."""
    dZ = P.copy()
    dZ[np.arange(len(gold)), gold] -= 1.0
    dZ[clamped] = 0.0
    return dZ


# ============================================================================
# Dropout
# ============================================================================

def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability rate, else 1/(1-rate)."""
    Validator.validate_range(rate, "dropout_rate", 0.0)
    if rate >= 1.0:
        raise ContractViolation("dropout rate must be < 1", field="dropout_rate", value=rate)
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def apply_dropout(x: np.ndarray, rate: float, rng: Optional[np.random.Generator], training: bool) -> np.ndarray:
    """Inverted dropout in training mode; identity at inference."""
    if not training or rate == 0.0:
        return np.asarray(x)
    return np.asarray(x) * dropout_mask(np.shape(x), rate, rng)


# ============================================================================
# Inference Forward
# ============================================================================

def span_distributions(H: np.ndarray, spans: Sequence[Tuple[int, int]],
                       scoring: ScoringParams) -> Tuple[np.ndarray, np.ndarray]:
    """Inference-mode (R, P) for spans of one sentence: projected reps and model distributions."""
    if not spans:
        return np.zeros((0, scoring.projection_dim)), np.zeros((0, scoring.V.shape[0]))
    idx = np.asarray(spans, dtype=np.int64)
    R = project(span_reps(H, idx[:, 0], idx[:, 1]), scoring.W)
    return R, label_dist(label_logits(R, scoring.V))


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-06"
__description__ = "Span representation, projection, scoring and cross-entropy"
