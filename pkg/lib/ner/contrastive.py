"""
Contrastive Loss Module for the Span NER Engine

Span-based supervised contrastive loss over a batch of projected span
representations, and the combined training objective.

For an anchor a and positive p of label l (a != p), with D_l̄ the instances
not labeled l:

    F(a, p) = d(a, p)/τ - log Σ_{m ∈ D_l̄} exp(d(a, m)/τ)
    loss_scl = -Σ_l Σ_{a ∈ D_l} 1/(N_l - 1) Σ_{p ∈ D_l, p != a} F(a, p)

d is cosine similarity. The denominator sums over negatives only; the
positive is not added to it. Labels with N_l < 2 or an empty D_l̄ add
nothing and are counted as skipped.

Author: SpanNER Team
Date: 2025-02-07
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .constants import NORM_FLOOR
from .diagnostics import NumericCounters
from .validation import ContractViolation, Validator

logger = logging.getLogger(__name__)


# ============================================================================
# Batch
# ============================================================================

@dataclass(frozen=True)
class ContrastiveBatch:
    """Projected representations with their label ids."""
    reps: np.ndarray  # (m, d_r)
    labels: np.ndarray  # (m,) label ids

    def __post_init__(self):
        reps = np.asarray(self.reps, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if reps.ndim != 2 or labels.ndim != 1 or reps.shape[0] != labels.shape[0]:
            raise ContractViolation("reps must be (m, d) with one label per row",
                                    field="batch", value=(reps.shape, labels.shape))
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)


# ============================================================================
# Cosine Similarity
# ============================================================================

def cosine(r1: np.ndarray, r2: np.ndarray, counters: Optional[NumericCounters] = None) -> float:
    """
    (r1 · r2) / (|r1| |r2|); 0 when either norm is below NORM_FLOOR.

    Example:
        >>> cosine(np.array([1., 0.]), np.array([0., 2.]))
        0.0
    """
    r1 = Validator.validate_vector(r1, "r1")
    r2 = Validator.validate_vector(r2, "r2", dim=len(r1))
    n1, n2 = np.linalg.norm(r1), np.linalg.norm(r2)
    if n1 < NORM_FLOOR or n2 < NORM_FLOOR:
        if counters is not None:
            counters.degenerate_vectors += 1
        return 0.0
    return float(np.clip(np.dot(r1, r2) / (n1 * n2), -1.0, 1.0))


def normalize_rows(R: np.ndarray, counters: Optional[NumericCounters] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Unit rows and norms; degenerate rows become zero vectors and are counted."""
    norms = np.linalg.norm(R, axis=1)
    degenerate = norms < NORM_FLOOR
    if counters is not None:
        counters.degenerate_vectors += int(np.count_nonzero(degenerate))
    safe = np.where(degenerate, 1.0, norms)
    Un = R / safe[:, None]
    Un[degenerate] = 0.0
    return Un, norms


def _logsumexp(x: np.ndarray) -> float:
    top = np.max(x)
    return float(top + np.log(np.sum(np.exp(x - top))))


# ============================================================================
# Contrastive Loss
# ============================================================================

def scl_pair_term(anchor: np.ndarray, positive: np.ndarray, negatives: np.ndarray, tau: float,
                  counters: Optional[NumericCounters] = None) -> float:
    """
    F = d(anchor, positive)/τ - logsumexp_m d(anchor, m)/τ over the negatives (rows of D_l̄).

    An empty negative set skips the term: returns 0 and bumps the skip counter.
    """
    Validator.validate_positive(tau, "tau")
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, len(anchor))
    if len(negatives) == 0:
        if counters is not None:
            counters.skipped_contrastive_terms += 1
        return 0.0
    d_pos = cosine(anchor, positive, counters)
    d_neg = np.array([cosine(anchor, m, counters) for m in negatives])
    return d_pos / tau - _logsumexp(d_neg / tau)


def scl_loss_and_grad(R: np.ndarray, labels: np.ndarray, tau: float,
                      counters: Optional[NumericCounters] = None,
                      with_grad: bool = True) -> Tuple[float, Optional[np.ndarray]]:
    """
    Contrastive loss and dL/dR for a batch of representations.

    The cosine matrix is built once; each label contributes its anchor rows
    in index order, so the result does not depend on the label visiting order.
    """
    Validator.validate_positive(tau, "tau")
    R = np.asarray(R, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = len(labels)
    dR = np.zeros_like(R) if with_grad else None
    if m < 2:
        return 0.0, dR

    Un, norms = normalize_rows(R, counters)
    C = Un @ Un.T
    dC = np.zeros_like(C)
    loss = 0.0

    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        others = np.flatnonzero(labels != label)
        n_l = len(members)
        if n_l < 2 or len(others) == 0:
            if counters is not None:
                counters.skipped_contrastive_terms += 1
            continue

        logits = C[np.ix_(members, others)] / tau  # anchors x negatives
        top = logits.max(axis=1, keepdims=True)
        expl = np.exp(logits - top)
        denom = expl.sum(axis=1, keepdims=True)
        lse = (top + np.log(denom))[:, 0]

        pos = C[np.ix_(members, members)]
        pos_sum = pos.sum(axis=1) - np.diag(pos)  # exclude the anchor itself
        loss -= float(np.sum(pos_sum / tau - (n_l - 1) * lse)) / (n_l - 1)

        if with_grad:
            block = np.full((n_l, n_l), -1.0 / ((n_l - 1) * tau))
            np.fill_diagonal(block, 0.0)
            dC[np.ix_(members, members)] += block
            dC[np.ix_(members, others)] += (expl / denom) / tau

    if with_grad:
        dU = (dC + dC.T) @ Un
        radial = np.sum(Un * dU, axis=1, keepdims=True)
        safe = np.where(norms < NORM_FLOOR, 1.0, norms)[:, None]
        dR = (dU - Un * radial) / safe
        dR[norms < NORM_FLOOR] = 0.0
    return loss, dR


def scl_loss(batch: ContrastiveBatch, tau: float, counters: Optional[NumericCounters] = None) -> float:
    """
    Supervised contrastive loss of a batch; 0 for batches smaller than 2.

    Example:
        >>> scl_loss(ContrastiveBatch(R, np.array([0, 0, 1])), tau=0.1)
    """
    loss, _ = scl_loss_and_grad(batch.reps, batch.labels, tau, counters, with_grad=False)
    return loss


def combined_loss(ce: float, scl: float, lam: float) -> float:
    """(1 - λ) ce + λ scl."""
    lam = Validator.validate_probability(lam, "lambda")
    return (1.0 - lam) * ce + lam * scl


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-07"
__description__ = "Span-based supervised contrastive loss and combined objective"
