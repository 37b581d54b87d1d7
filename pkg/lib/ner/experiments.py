"""
Experiment Harness for the Span NER Engine

Multi-seed protocols that train and score many models:

- robustness_experiment: train on a clean set and on the clean set plus a
  noisy extension, report the mean change of test F1 per variant
- batch_size_sweep: mean test F1 per batch size and the spread across sizes
- ablation_experiment: mean test F1 per variant on one training set
- dump_representations / read_representations: projected span vectors of
  gold spans and sampled negatives, for offline visualisation

Variants:
    ce_only                 λ = 0, α = 0
    scl_only                α = 0
    scl_rai                 configured λ and α
    scl_rai_all_negatives   configured λ and α, every non-gold span a negative

Runs are independent; parallel=True spreads them over a process pool and the
results are collected in the same order as the sequential loop.

Author: SpanNER Team
Date: 2025-02-13
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool, cpu_count
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .binary_format import BinaryReader, BinaryWriter, FLOAT_DTYPE, PathLike
from .constants import (
    ALL_VARIANTS,
    REPRESENTATION_MAGIC,
    VARIANT_CE_ONLY,
    VARIANT_SCL_ONLY,
    VARIANT_SCL_RAI,
    VARIANT_SCL_RAI_ALL_NEGATIVES,
)
from .corpus import Dataset, merge_datasets
from .evaluation import evaluate
from .hyperparams import Hyperparams
from .logging_conventions import LogModules, LoggedOperation, log_operation_complete, log_operation_init
from .rai import centroid_instances
from .span_model import ModelParams, span_distributions
from .training import train
from .validation import ContractViolation, Validator

logger = logging.getLogger(__name__)

MAX_WORKERS = 4


# ============================================================================
# Variants and Runs
# ============================================================================

def variant_hyperparams(hyper: Hyperparams, variant: str) -> Hyperparams:
    """Hyperparameters of one ablation variant derived from the base configuration."""
    Validator.validate_choice(variant, ALL_VARIANTS, "variant")
    if variant == VARIANT_CE_ONLY:
        return hyper.with_overrides(lambda_=0.0, alpha=0.0)
    if variant == VARIANT_SCL_ONLY:
        return hyper.with_overrides(alpha=0.0)
    if variant == VARIANT_SCL_RAI_ALL_NEGATIVES:
        return hyper.with_overrides(negative_sampling=False)
    return hyper


def align_label_sets(*datasets: Dataset) -> List[Dataset]:
    """The datasets re-expressed over the union of their label sets."""
    label_set = datasets[0].label_set
    for dataset in datasets[1:]:
        label_set = label_set.union(dataset.label_set)
    return [d.with_label_set(label_set) for d in datasets]


def empty_like(dataset: Dataset) -> Dataset:
    return Dataset((), (), dataset.label_set)


@dataclass(frozen=True)
class TrainJob:
    """One training run and the test set it is scored on."""
    train_set: Dataset
    dev_set: Dataset
    test_set: Dataset
    hyper: Hyperparams


def run_job(job: TrainJob) -> float:
    """Test F1 of the model selected on the dev set."""
    result = train(job.train_set, job.dev_set, job.hyper)
    report, _ = evaluate(result.params, result.table, job.test_set, job.hyper.alpha, job.hyper.max_span_len)
    return report.f1


def run_jobs(jobs: Sequence[TrainJob], parallel: bool = False) -> List[float]:
    """Test F1 per job, in job order."""
    if not parallel or len(jobs) < 2:
        return [run_job(job) for job in jobs]
    workers = min(cpu_count(), MAX_WORKERS, len(jobs))
    log_operation_init(logger, LogModules.EXPERIMENT, "parallel runs", jobs=len(jobs), workers=workers)
    with Pool(processes=workers) as pool:
        return pool.map(run_job, jobs)


def _check_seeds(seeds: Sequence[int]):
    if len(seeds) == 0:
        raise ContractViolation("at least one seed is required", field="seeds")


# ============================================================================
# Robustness Experiment
# ============================================================================

@dataclass
class RobustnessRow:
    variant: str
    clean_f1: List[float] = field(default_factory=list)  # one per seed
    noisy_f1: List[float] = field(default_factory=list)

    @property
    def mean_clean(self) -> float:
        return float(np.mean(self.clean_f1))

    @property
    def mean_noisy(self) -> float:
        return float(np.mean(self.noisy_f1))

    @property
    def delta(self) -> float:
        """Mean of F1(clean + noisy) - F1(clean) over seeds."""
        return float(np.mean(np.subtract(self.noisy_f1, self.clean_f1)))


@dataclass
class RobustnessTable:
    rows: List[RobustnessRow]
    seeds: Tuple[int, ...]

    def row(self, variant: str) -> RobustnessRow:
        for row in self.rows:
            if row.variant == variant:
                return row
        raise KeyError(variant)

    def to_tsv(self) -> str:
        lines = ["variant\tf1_clean\tf1_clean_plus_noisy\tdelta"]
        for row in self.rows:
            lines.append(f"{row.variant}\t{row.mean_clean:.2f}\t{row.mean_noisy:.2f}\t{row.delta:.2f}")
        return "\n".join(lines) + "\n"


def robustness_experiment(clean: Dataset, noisy_extra: Dataset, test: Dataset,
                          variants: Sequence[str] = (VARIANT_CE_ONLY, VARIANT_SCL_ONLY, VARIANT_SCL_RAI),
                          seeds: Sequence[int] = (1, 2, 3, 4, 5), hyper: Optional[Hyperparams] = None,
                          dev: Optional[Dataset] = None, parallel: bool = False) -> RobustnessTable:
    """
    Degradation of test F1 when a noisy extension is added to the training data.

    For every variant and seed two models are trained, one on `clean` and one
    on `clean` merged with `noisy_extra`; without a dev set the final epoch
    is kept.

    Example:
        >>> table = robustness_experiment(train, corrupted_extra, test, seeds=(1, 2, 3), hyper=hyper, dev=dev)
        >>> table.row("scl_rai").delta
    """
    _check_seeds(seeds)
    hyper = hyper or Hyperparams()
    for variant in variants:
        Validator.validate_choice(variant, ALL_VARIANTS, "variant")
    dev = dev if dev is not None else empty_like(clean)
    clean, noisy_extra, test, dev = align_label_sets(clean, noisy_extra, test, dev)
    combined = merge_datasets(clean, noisy_extra)

    jobs = []
    for variant in variants:
        for seed in seeds:
            run_hyper = variant_hyperparams(hyper, variant).with_overrides(seed=seed)
            jobs.append(TrainJob(clean, dev, test, run_hyper))
            jobs.append(TrainJob(combined, dev, test, run_hyper))

    with LoggedOperation(logger, LogModules.EXPERIMENT, "robustness experiment"):
        scores = iter(run_jobs(jobs, parallel))
        rows = []
        for variant in variants:
            row = RobustnessRow(variant)
            for _ in seeds:
                row.clean_f1.append(next(scores))
                row.noisy_f1.append(next(scores))
            logger.info(f"[{LogModules.EXPERIMENT}] {variant}: f1_clean={row.mean_clean:.2f}, "
                        f"f1_noisy={row.mean_noisy:.2f}, delta={row.delta:.2f}")
            rows.append(row)
    return RobustnessTable(rows, tuple(seeds))


# ============================================================================
# Batch Size Sweep
# ============================================================================

@dataclass
class SweepTable:
    sizes: Tuple[int, ...]
    f1: Dict[int, List[float]]  # batch size -> test F1 per seed

    def mean_f1(self, size: int) -> float:
        return float(np.mean(self.f1[size]))

    @property
    def spread(self) -> float:
        """max - min of the per-size mean F1."""
        means = [self.mean_f1(size) for size in self.sizes]
        return float(max(means) - min(means))

    def to_tsv(self) -> str:
        lines = ["batch_size\tmean_f1\tspread"]
        spread = self.spread
        for size in self.sizes:
            lines.append(f"{size}\t{self.mean_f1(size):.2f}\t{spread:.2f}")
        return "\n".join(lines) + "\n"


def batch_size_sweep(train_set: Dataset, dev: Dataset, test: Dataset, sizes: Sequence[int],
                     seeds: Sequence[int], hyper: Optional[Hyperparams] = None,
                     parallel: bool = False) -> SweepTable:
    """One model per (batch size, seed) with every other hyperparameter fixed."""
    if len(sizes) == 0:
        raise ContractViolation("at least one batch size is required", field="sizes")
    _check_seeds(seeds)
    hyper = hyper or Hyperparams()
    train_set, dev, test = align_label_sets(train_set, dev, test)
    jobs = [TrainJob(train_set, dev, test, hyper.with_overrides(batch_size=size, seed=seed))
            for size in sizes for seed in seeds]

    with LoggedOperation(logger, LogModules.EXPERIMENT, "batch size sweep"):
        scores = iter(run_jobs(jobs, parallel))
        table = SweepTable(tuple(sizes), {size: [next(scores) for _ in seeds] for size in sizes})
    log_operation_complete(logger, LogModules.EXPERIMENT, "Batch size sweep", spread=f"{table.spread:.2f}")
    return table


# ============================================================================
# Ablation
# ============================================================================

@dataclass
class AblationTable:
    f1: Dict[str, List[float]]  # variant -> test F1 per seed

    def mean_f1(self, variant: str) -> float:
        return float(np.mean(self.f1[variant]))

    def to_tsv(self) -> str:
        lines = ["variant\tmean_f1"]
        lines.extend(f"{variant}\t{self.mean_f1(variant):.2f}" for variant in self.f1)
        return "\n".join(lines) + "\n"


def ablation_experiment(train_set: Dataset, dev: Dataset, test: Dataset,
                        variants: Sequence[str] = ALL_VARIANTS, seeds: Sequence[int] = (1, 2, 3),
                        hyper: Optional[Hyperparams] = None, parallel: bool = False) -> AblationTable:
    """Mean test F1 per variant; ce_only is the plain span-model baseline."""
    _check_seeds(seeds)
    hyper = hyper or Hyperparams()
    train_set, dev, test = align_label_sets(train_set, dev, test)
    jobs = [TrainJob(train_set, dev, test, variant_hyperparams(hyper, variant).with_overrides(seed=seed))
            for variant in variants for seed in seeds]

    with LoggedOperation(logger, LogModules.EXPERIMENT, "ablation"):
        scores = iter(run_jobs(jobs, parallel))
        return AblationTable({variant: [next(scores) for _ in seeds] for variant in variants})


# ============================================================================
# Representation Dump
# ============================================================================

@dataclass(frozen=True)
class RepresentationRecord:
    sentence_id: int
    start: int
    end: int
    label: str
    vector: np.ndarray = field(compare=False)  # float32, as stored


def representations(params: ModelParams, dataset: Dataset, hyper: Hyperparams,
                    features=None) -> List[RepresentationRecord]:
    """Gold spans then negatives (centroid stream) of every sentence, in inference mode."""
    dataset = dataset.with_label_set(params.label_set)
    encoder = params.make_encoder(features)
    records = []
    per_sentence = centroid_instances(dataset, hyper.max_span_len, hyper.neg_ratio, hyper.seed,
                                      hyper.negative_sampling)
    for sentence, items in zip(dataset.sentences, per_sentence):
        if not items:
            continue
        R, _ = span_distributions(encoder.encode(sentence), [(i, j) for i, j, _ in items], params.scoring)
        for (i, j, label), r in zip(items, R):
            records.append(RepresentationRecord(sentence.id, i, j, label, r.astype(FLOAT_DTYPE)))
    return records


def dump_representations(params: ModelParams, dataset: Dataset, path: PathLike, hyper: Hyperparams,
                         features=None) -> List[RepresentationRecord]:
    """
    Write one record per gold span and per sampled negative.

    Layout: magic, version, u32 d_r, u32 record count, then per record
    i64 sentence id, u32 i, u32 j, label, d_r float32.
    """
    records = representations(params, dataset, hyper, features)
    writer = BinaryWriter(REPRESENTATION_MAGIC)
    writer.u32(params.projection_dim)
    writer.u32(len(records))
    for record in records:
        writer.i64(record.sentence_id)
        writer.u32(record.start)
        writer.u32(record.end)
        writer.text(record.label)
        writer.floats(record.vector)
    writer.write(path)
    logger.info(f"[{LogModules.EXPERIMENT}] Wrote {len(records)} span representations (path={path})")
    return records


def read_representations(path: PathLike) -> Tuple[int, List[RepresentationRecord]]:
    """(d_r, records) of a representation dump."""
    reader = BinaryReader.open(path, REPRESENTATION_MAGIC)
    d_r = reader.u32()
    records = []
    for _ in range(reader.u32()):
        sentence_id = reader.i64()
        start, end = reader.u32(), reader.u32()
        label = reader.text()
        vector = reader.floats(d_r).astype(FLOAT_DTYPE)
        records.append(RepresentationRecord(sentence_id, start, end, label, vector))
    reader.expect_end()
    return d_r, records


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-13"
__description__ = "Robustness, batch-size and ablation experiments plus representation dumps"
