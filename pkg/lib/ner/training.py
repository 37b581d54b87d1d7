"""
Training Module for the Span NER Engine

Batch construction, the forward pass with every cached activation, analytic
backward pass, and the seeded training loop.

Forward pass of one batch (instances pooled across the batch's sentences):

    H  = encoder(sentences) ⊙ mask_h
    S  = [h_i; h_j; h_i - h_j; h_i ⊙ h_j]
    R  = tanh(S Wᵀ),  Rd = R ⊙ mask_r
    P  = softmax(Rd Vᵀ)
    loss_final = (1 - λ) Σ -log P[gold] + λ loss_scl(Rd)

Randomness:
    shuffle   (seed, "shuffle", epoch)
    negatives (seed, "negatives", epoch, sentence id)
    dropout   (seed, "dropout", epoch, batch index)

Author: SpanNER Team
Date: 2025-02-11
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import STREAM_DROPOUT, STREAM_NEGATIVES, STREAM_SHUFFLE
from .contrastive import scl_loss_and_grad
from .corpus import Dataset, GoldSpan, LabelSet, Sentence, SpanInstance, all_negatives, negative_sample
from .diagnostics import NumericCounters
from .encoder import PrecomputedEncoder, Vocabulary
from .evaluation import ScoreReport, evaluate
from .hyperparams import Hyperparams
from .logging_conventions import LogModules, log_error, log_operation_complete, log_operation_init, log_warning
from .optimizer import OptimizerState, adam_step
from .performance_monitor import PerformanceMonitor
from .rai import CentroidTable, build_centroid_table
from .random_streams import derive_rng
from .span_model import (
    ModelParams,
    ce_logit_gradient,
    dropout_mask,
    gold_probabilities,
    init_model_params,
    label_dist,
    span_reps,
)
from .validation import ContractViolation, NumericError

logger = logging.getLogger(__name__)

PHASE_FORWARD = "forward"
PHASE_BACKWARD = "backward"
PHASE_UPDATE = "update"


# ============================================================================
# Batch Construction
# ============================================================================

@dataclass(frozen=True)
class TrainingBatch:
    """
    Span instances pooled over a group of sentences.

    Instance k lies in sentences[owner[k]] and covers tokens starts[k]..ends[k].
    """
    sentences: Tuple[Sentence, ...]
    instances: Tuple[SpanInstance, ...]
    owner: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    gold: np.ndarray  # label ids

    @classmethod
    def from_instances(cls, sentences: Sequence[Sentence], instances: Sequence[SpanInstance],
                       label_set: LabelSet) -> "TrainingBatch":
        position = {s.id: k for k, s in enumerate(sentences)}
        for inst in instances:
            n = len(sentences[position[inst.sentence_id]])
            if not 0 <= inst.start <= inst.end < n:
                raise ContractViolation(f"instance ({inst.start},{inst.end}) outside sentence {inst.sentence_id}",
                                        field="instances")
        return cls(
            tuple(sentences),
            tuple(instances),
            np.array([position[i.sentence_id] for i in instances], dtype=np.int64),
            np.array([i.start for i in instances], dtype=np.int64),
            np.array([i.end for i in instances], dtype=np.int64),
            np.array([label_set.index(i.label) for i in instances], dtype=np.int64),
        )

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def token_offsets(self) -> np.ndarray:
        """Start row of each sentence in the concatenated token matrix."""
        lengths = np.array([len(s) for s in self.sentences], dtype=np.int64)
        return np.concatenate([[0], np.cumsum(lengths)[:-1]])

    @property
    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


def sentence_instances(sentence: Sentence, gold: Sequence[GoldSpan], hyper: Hyperparams,
                       epoch: int) -> List[SpanInstance]:
    """Gold spans then this epoch's negatives for one sentence."""
    instances = [SpanInstance(sentence.id, s.start, s.end, s.label) for s in gold]
    if hyper.negative_sampling:
        rng = derive_rng(hyper.seed, STREAM_NEGATIVES, epoch, sentence.id)
        instances.extend(negative_sample(sentence, gold, hyper.neg_ratio, hyper.max_span_len, rng))
    else:
        instances.extend(all_negatives(sentence, gold, hyper.max_span_len))
    return instances


def build_training_batch(dataset: Dataset, indices: Sequence[int], hyper: Hyperparams, epoch: int) -> TrainingBatch:
    sentences = [dataset.sentences[k] for k in indices]
    instances = []
    for k in indices:
        instances.extend(sentence_instances(dataset.sentences[k], dataset.annotations[k], hyper, epoch))
    return TrainingBatch.from_instances(sentences, instances, dataset.label_set)


# ============================================================================
# Forward Pass
# ============================================================================

@dataclass
class DropoutMasks:
    hidden: np.ndarray  # (batch tokens, d_h)
    projection: np.ndarray  # (instances, d_r)


def sample_dropout_masks(batch: TrainingBatch, hidden_dim: int, projection_dim: int, rate: float,
                         rng: np.random.Generator) -> DropoutMasks:
    """Hidden mask drawn first, then the projection mask."""
    hidden = dropout_mask((batch.num_tokens, hidden_dim), rate, rng)
    projection = dropout_mask((len(batch), projection_dim), rate, rng)
    return DropoutMasks(hidden, projection)


@dataclass
class BatchForward:
    """Loss components and the activations the backward pass needs."""
    loss_ce: float
    loss_scl: float
    loss_final: float
    encoder_cache: object
    masks: Optional[DropoutMasks]
    Hd: np.ndarray  # concatenated hidden vectors after dropout
    rows_i: np.ndarray  # row of h_i in Hd per instance
    rows_j: np.ndarray
    S: np.ndarray
    R: np.ndarray
    Rd: np.ndarray
    P: np.ndarray
    clamped: np.ndarray
    d_rd_scl: Optional[np.ndarray]
    counters: NumericCounters = field(default_factory=NumericCounters)


def forward_batch(params: ModelParams, batch: TrainingBatch, hyper: Hyperparams,
                  rng: Optional[np.random.Generator] = None, masks: Optional[DropoutMasks] = None,
                  encoder=None, counters: Optional[NumericCounters] = None) -> BatchForward:
    """
    Forward pass and loss of one batch.

    Dropout uses `masks` if given, else masks drawn from `rng`; with neither
    (or a zero rate) the pass runs in inference mode.
    """
    if encoder is None:
        encoder = params.make_encoder()
    counters = counters if counters is not None else NumericCounters()
    if masks is None and rng is not None and hyper.dropout_rate > 0.0:
        masks = sample_dropout_masks(batch, params.hidden_dim, params.projection_dim, hyper.dropout_rate, rng)

    hidden, cache = encoder.forward(batch.sentences)
    H = np.concatenate(hidden) if hidden else np.zeros((0, params.hidden_dim))
    Hd = H * masks.hidden if masks is not None else H

    offsets = batch.token_offsets
    rows_i = offsets[batch.owner] + batch.starts
    rows_j = offsets[batch.owner] + batch.ends
    S = span_reps(Hd, rows_i, rows_j)
    R = np.tanh(S @ params.scoring.W.T)
    Rd = R * masks.projection if masks is not None else R
    P = label_dist(Rd @ params.scoring.V.T)

    p_gold, clamped = gold_probabilities(P, batch.gold, counters)
    loss_ce = float(-np.sum(np.log(p_gold)))
    lam = hyper.lambda_
    loss_scl, d_rd_scl = scl_loss_and_grad(Rd, batch.gold, hyper.tau, counters, with_grad=lam > 0.0)
    loss_final = (1.0 - lam) * loss_ce + lam * loss_scl

    if not np.isfinite(loss_final):
        raise NumericError("non-finite loss", parameter="loss_final")
    return BatchForward(loss_ce, loss_scl, loss_final, cache, masks, Hd, rows_i, rows_j,
                        S, R, Rd, P, clamped, d_rd_scl, counters)


# ============================================================================
# Backward Pass
# ============================================================================

def backward(params: ModelParams, fwd: BatchForward, hyper: Hyperparams, batch: TrainingBatch,
             encoder=None) -> Dict[str, np.ndarray]:
    """
    Exact gradient of loss_final for every trainable array, in named_arrays() order.

    Raises:
        NumericError: a gradient has a non-finite entry (names the parameter)
    """
    if encoder is None:
        encoder = params.make_encoder()
    lam = hyper.lambda_
    W, V = params.scoring.W, params.scoring.V

    dZ = (1.0 - lam) * ce_logit_gradient(fwd.P, batch.gold, fwd.clamped)
    dV = dZ.T @ fwd.Rd
    dRd = dZ @ V
    if lam > 0.0 and fwd.d_rd_scl is not None:
        dRd = dRd + lam * fwd.d_rd_scl
    dR = dRd * fwd.masks.projection if fwd.masks is not None else dRd
    dA = dR * (1.0 - fwd.R ** 2)
    dW = dA.T @ fwd.S
    dS = dA @ W

    d_h = params.hidden_dim
    a, b, c, d = (dS[:, k * d_h:(k + 1) * d_h] for k in range(4))
    hi, hj = fwd.Hd[fwd.rows_i], fwd.Hd[fwd.rows_j]
    dHd = np.zeros_like(fwd.Hd)
    np.add.at(dHd, fwd.rows_i, a + c + d * hj)
    np.add.at(dHd, fwd.rows_j, b - c + d * hi)
    dH = dHd * fwd.masks.hidden if fwd.masks is not None else dHd

    grads: Dict[str, np.ndarray] = {}
    if encoder.trainable:
        lengths = [len(s) for s in batch.sentences]
        grads.update(encoder.backward(fwd.encoder_cache, np.split(dH, np.cumsum(lengths)[:-1])))
    grads.update(W=dW, V=dV)

    ordered = {}
    for name in params.named_arrays():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            log_error(logger, LogModules.TRAINING, "backward", "non-finite gradient", parameter=name)
            raise NumericError("non-finite gradient", parameter=name)
        ordered[name] = g
    return ordered


# ============================================================================
# Training Loop
# ============================================================================

@dataclass
class EpochRecord:
    epoch: int
    loss_ce: float
    loss_scl: float
    loss_final: float
    dev_precision: float
    dev_recall: float
    dev_f1: float
    wall_seconds: float = 0.0

    def to_line(self) -> str:
        """Tab-separated training-log record."""
        return (f"{self.epoch}\t{self.loss_ce:.6f}\t{self.loss_scl:.6f}\t{self.loss_final:.6f}\t"
                f"{self.dev_precision:.2f}\t{self.dev_recall:.2f}\t{self.dev_f1:.2f}\t{self.wall_seconds:.2f}")


@dataclass
class TrainingResult:
    params: ModelParams
    table: CentroidTable
    log: List[EpochRecord]
    best_epoch: int  # 0 = initial parameters
    best_dev_f1: float
    counters: NumericCounters

    def log_text(self) -> str:
        return "".join(record.to_line() + "\n" for record in self.log)


def _check_label_sets(train_set: Dataset, dev_set: Dataset):
    if train_set.label_set != dev_set.label_set:
        raise ContractViolation("train and dev must share a label set", field="label_set",
                                value=(train_set.label_set.labels, dev_set.label_set.labels))


def initial_params(train_set: Dataset, hyper: Hyperparams,
                   features: Optional[PrecomputedEncoder] = None) -> ModelParams:
    """Seeded parameters; a vocabulary from the training tokens unless features are given."""
    vocab = None if features is not None else Vocabulary.build(train_set.sentences, hyper.min_token_count)
    hidden_dim = features.hidden_dim if features is not None else hyper.hidden_dim
    return init_model_params(train_set.label_set, hyper.seed, vocab, hidden_dim=hidden_dim,
                             embed_dim=hyper.embed_dim, projection_dim=hyper.projection_dim,
                             scale=hyper.init_scale)


def run_epoch(params: ModelParams, state: OptimizerState, train_set: Dataset, hyper: Hyperparams,
              epoch: int, encoder, counters: NumericCounters,
              monitor: Optional[PerformanceMonitor] = None) -> Tuple[float, float, float]:
    """One pass over the shuffled training set; returns summed (ce, scl, final) losses."""
    if monitor is None:
        monitor = PerformanceMonitor(logger)
    order = derive_rng(hyper.seed, STREAM_SHUFFLE, epoch).permutation(len(train_set))
    totals = np.zeros(3)
    arrays = params.named_arrays()
    for batch_index, start in enumerate(range(0, len(order), hyper.batch_size)):
        batch = build_training_batch(train_set, order[start:start + hyper.batch_size], hyper, epoch)
        if len(batch) == 0:
            continue
        monitor.start_step()
        rng = derive_rng(hyper.seed, STREAM_DROPOUT, epoch, batch_index)
        with monitor.timed_phase(PHASE_FORWARD):
            fwd = forward_batch(params, batch, hyper, rng=rng, encoder=encoder, counters=counters)
        with monitor.timed_phase(PHASE_BACKWARD):
            grads = backward(params, fwd, hyper, batch, encoder)
        with monitor.timed_phase(PHASE_UPDATE):
            adam_step(arrays, grads, state, hyper.learning_rate)
        totals += (fwd.loss_ce, fwd.loss_scl, fwd.loss_final)
        monitor.end_step()
    return float(totals[0]), float(totals[1]), float(totals[2])


def train(train_set: Dataset, dev_set: Dataset, hyper: Hyperparams,
          features: Optional[PrecomputedEncoder] = None, log_wall_time: bool = False,
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainingResult:
    """
    Train, selecting the epoch with the best dev F1 (RAI enabled, earlier epoch on ties).

    The centroid table of the result is rebuilt from the selected parameters.
    An empty dev set keeps the final epoch.

    Example:
        >>> result = train(train_set, dev_set, Hyperparams(epochs=5, learning_rate=1e-3))
        >>> print(result.log_text())
    """
    _check_label_sets(train_set, dev_set)
    log_operation_init(logger, LogModules.TRAINING, "training", sentences=len(train_set),
                       spans=train_set.num_spans, epochs=hyper.epochs, batch_size=hyper.batch_size,
                       lr=hyper.learning_rate, seed=hyper.seed)

    params = initial_params(train_set, hyper, features)
    encoder = params.make_encoder(features)
    state = OptimizerState.for_params(params.named_arrays())
    counters = NumericCounters()
    monitor = PerformanceMonitor(logger)

    best_params, best_epoch, best_f1 = params.copy(), 0, -1.0
    records: List[EpochRecord] = []
    for epoch in range(1, hyper.epochs + 1):
        started = time.perf_counter()
        losses = run_epoch(params, state, train_set, hyper, epoch, encoder, counters, monitor)

        if len(dev_set):
            table = build_centroid_table(params, train_set, hyper.max_span_len, hyper.neg_ratio, hyper.seed,
                                         hyper.negative_sampling, features)
            report, _ = evaluate(params, table, dev_set, hyper.alpha, hyper.max_span_len, features)
        else:
            report = ScoreReport()

        wall = time.perf_counter() - started if log_wall_time else 0.0
        record = EpochRecord(epoch, *losses, report.precision, report.recall, report.f1, wall)
        records.append(record)
        logger.info(f"[{LogModules.TRAINING}] Epoch {epoch}: loss_ce={losses[0]:.4f}, "
                    f"loss_scl={losses[1]:.4f}, loss_final={losses[2]:.4f}, dev_f1={report.f1:.2f}")
        monitor.log_summary(f"epoch {epoch}")
        if on_epoch is not None:
            on_epoch(record)

        if len(dev_set) and report.overall.f1 > best_f1:
            best_params, best_epoch, best_f1 = params.copy(), epoch, report.overall.f1

    if not len(dev_set):
        log_warning(logger, LogModules.TRAINING, "Empty dev set; keeping the final epoch")
        best_params, best_epoch = params.copy(), hyper.epochs
    elif hyper.epochs == 0:
        # untrained model; report its dev F1
        table = build_centroid_table(params, train_set, hyper.max_span_len, hyper.neg_ratio, hyper.seed,
                                     hyper.negative_sampling, features)
        best_f1 = evaluate(params, table, dev_set, hyper.alpha, hyper.max_span_len, features)[0].overall.f1
    counters.report(logger, LogModules.TRAINING, "Training")

    table = build_centroid_table(best_params, train_set, hyper.max_span_len, hyper.neg_ratio, hyper.seed,
                                 hyper.negative_sampling, features)
    best_f1 = max(best_f1, 0.0)
    log_operation_complete(logger, LogModules.TRAINING, "Training", best_epoch=best_epoch,
                           best_dev_f1=f"{best_f1:.2f}")
    return TrainingResult(best_params, table, records, best_epoch, round(best_f1, 2), counters)


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-11"
__description__ = "Batch forward/backward and the seeded training loop"
