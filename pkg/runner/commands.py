"""
Command Handlers for the Span NER Runner

One handler per runner command. Every handler takes the effective RunConfig,
reads the files it references, writes its artifacts and returns an exit code.
Reports meant for the user go to stdout; everything else is logged.

Author: SpanNER Team
Date: 2025-02-14
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

import yaml

from lib.ner.checkpoint import load_checkpoint, save_checkpoint
from lib.ner.constants import EXIT_CHECK_FAILED, EXIT_OK, STREAM_CORRUPTION
from lib.ner.corpus import (
    Dataset,
    LabelSet,
    build_entity_dictionary,
    corrupt_by_rate,
    dataset_statistics,
    distant_supervise,
    format_bio,
    format_bio_triples,
    format_entity_dictionary,
    format_tokens,
    load_entity_dictionary,
    parse_bio,
    parse_tokens,
)
from lib.ner.encoder import load_precomputed
from lib.ner.evaluation import evaluate, format_score_report, score, score_triples
from lib.ner.experiments import (
    ablation_experiment,
    align_label_sets,
    batch_size_sweep,
    dump_representations,
    robustness_experiment,
)
from lib.ner.gradcheck import gradcheck_suite
from lib.ner.logging_conventions import LogModules, log_error, log_operation_complete
from lib.ner.rai import load_centroid_table, save_centroid_table
from lib.ner.random_streams import derive_rng
from lib.ner.synthetic import partial_dictionary, synthetic_splits
from lib.ner.training import train
from lib.ner.validation import ValidationError

from runner.models import RunConfig

logger = logging.getLogger(__name__)


# ============================================================================
# File Helpers
# ============================================================================

def read_text(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"[{LogModules.MAIN}] Wrote {path}")


def read_dataset(path: Path, first_id: int = 0, label_set: Optional[LabelSet] = None) -> Dataset:
    return parse_bio(read_text(path), label_set, first_id)


def read_splits(*paths: Path) -> List[Dataset]:
    """BIO files with consecutive sentence id ranges, so the sets can be merged."""
    datasets, first_id = [], 0
    for path in paths:
        dataset = read_dataset(path, first_id)
        datasets.append(dataset)
        first_id += len(dataset)
    return datasets


def _artifact(config: RunConfig, name: str) -> Path:
    path = getattr(config, name)
    if path is None:
        raise ValidationError(f"--{name.replace('_', '-')} is required", field=name)
    return Path(path)


def _features(config: RunConfig):
    if config.features is None:
        return None
    config.require("features")
    return load_precomputed(config.features)


# ============================================================================
# Corpus Commands
# ============================================================================

def cmd_corrupt(config: RunConfig) -> int:
    """
    Noisy training set: rate mode deletes gold entities with probability
    drop_prob; dict mode annotates raw text with an entity dictionary.
    """
    output = _artifact(config, "output")
    if config.mode == "rate":
        config.require("input")
        dataset = read_dataset(config.input)
        noisy = corrupt_by_rate(dataset, config.drop_prob, derive_rng(config.hyper.seed, STREAM_CORRUPTION))
        stats = {
            "mode": "rate",
            "drop_prob": config.drop_prob,
            "seed": config.hyper.seed,
            "entities_in": dataset.num_spans,
            "entities_kept": noisy.num_spans,
            "entities_dropped": dataset.num_spans - noisy.num_spans,
        }
    else:
        config.require("raw", "dictionary")
        raw = parse_tokens(read_text(config.raw))
        dictionary = load_entity_dictionary(read_text(config.dictionary))
        noisy = distant_supervise(raw, dictionary)
        stats = {
            "mode": "dict",
            "dictionary_entries": len(dictionary),
            "dictionary_collisions": dictionary.collisions,
            "entities_matched": noisy.num_spans,
        }
    stats["output"] = dataset_statistics(noisy)

    write_text(output, format_bio(noisy))
    stats_path = config.stats or output.with_name(output.name + ".stats.yaml")
    write_text(stats_path, yaml.safe_dump(stats, sort_keys=False))
    log_operation_complete(logger, LogModules.CORPUS, "Corruption", mode=config.mode,
                           sentences=len(noisy), spans=noisy.num_spans)
    return EXIT_OK


def cmd_build_dict(config: RunConfig) -> int:
    config.require("input")
    dictionary = build_entity_dictionary(read_dataset(config.input))
    write_text(_artifact(config, "output"), format_entity_dictionary(dictionary))
    print(f"{len(dictionary)} entries, {dictionary.collisions} collisions")
    return EXIT_OK


def cmd_synth(config: RunConfig) -> int:
    """train/dev/test/extra BIO files, the extra split as raw text, and a partial dictionary."""
    out_dir = _artifact(config, "output_dir")
    seed = config.hyper.seed
    splits = synthetic_splits(seed, config.n_train, config.n_dev, config.n_test, config.n_extra)
    for name, dataset in zip(("train", "dev", "test", "extra"), splits):
        write_text(out_dir / f"{name}.bio", format_bio(dataset))
    write_text(out_dir / "raw.txt", format_tokens(splits[3].sentences))
    write_text(out_dir / "dictionary.tsv",
               format_entity_dictionary(partial_dictionary(splits[3], config.dictionary_fraction, seed)))
    return EXIT_OK


# ============================================================================
# Model Commands
# ============================================================================

def cmd_train(config: RunConfig) -> int:
    config.require("train", "dev")
    checkpoint = _artifact(config, "checkpoint")
    centroids = _artifact(config, "centroids")
    training_log = config.training_log or checkpoint.with_name(checkpoint.name + ".log.tsv")

    train_set, dev_set = align_label_sets(*read_splits(config.train, config.dev))
    result = train(train_set, dev_set, config.hyper, _features(config), config.log_wall_time)

    save_checkpoint(checkpoint, result.params, config.hyper)
    save_centroid_table(centroids, result.table)
    write_text(training_log, result.log_text())
    print(f"best epoch {result.best_epoch}: dev F1 {result.best_dev_f1:.2f}")
    return EXIT_OK


def cmd_eval(config: RunConfig) -> int:
    """P/R/F1 to stdout and, with --output, a `token<TAB>gold<TAB>pred` file."""
    config.require("checkpoint", "centroids", "test")
    params, _ = load_checkpoint(config.checkpoint)
    table = load_centroid_table(config.centroids)
    if table.label_set != params.label_set:
        raise ValidationError("centroid table and checkpoint have different label sets", field="centroids")
    test = read_dataset(config.test, label_set=params.label_set)

    hyper = config.hyper
    report, predictions = evaluate(params, table, test, hyper.alpha, hyper.max_span_len, _features(config))
    print(format_score_report(report), end="")
    if config.output is not None:
        write_text(config.output, format_bio_triples(test, [[p.as_gold() for p in spans] for spans in predictions]))
    return EXIT_OK


def cmd_dump_reprs(config: RunConfig) -> int:
    config.require("checkpoint", "input")
    params, _ = load_checkpoint(config.checkpoint)
    dataset = read_dataset(config.input, label_set=params.label_set)
    records = dump_representations(params, dataset, _artifact(config, "output"), config.hyper, _features(config))
    print(f"{len(records)} span representations")
    return EXIT_OK


# ============================================================================
# Experiments and Checks
# ============================================================================

def _experiment_data(config: RunConfig):
    """(train, dev, test, extra); synthetic extra sets are corrupted here, file extra sets are used as given."""
    if config.synthetic:
        seed = config.hyper.seed
        train_set, dev, test, extra = synthetic_splits(seed, config.n_train, config.n_dev, config.n_test,
                                                       config.n_extra)
        return train_set, dev, test, corrupt_by_rate(extra, config.drop_prob, derive_rng(seed, STREAM_CORRUPTION))
    names = ["train", "dev", "test"] + (["extra"] if config.experiment == "robustness" else [])
    config.require(*names)
    datasets = read_splits(*(getattr(config, name) for name in names))
    return tuple(datasets) + ((None,) if len(datasets) == 3 else ())


def cmd_experiment(config: RunConfig) -> int:
    train_set, dev, test, extra = _experiment_data(config)
    hyper, seeds = config.hyper, config.seeds
    if config.experiment == "robustness":
        table = robustness_experiment(train_set, extra, test, config.variants, seeds, hyper, dev, config.parallel)
    elif config.experiment == "batch_sweep":
        table = batch_size_sweep(train_set, dev, test, config.sizes, seeds, hyper, config.parallel)
    else:
        table = ablation_experiment(train_set, dev, test, config.variants, seeds, hyper, config.parallel)
    text = table.to_tsv()
    print(text, end="")
    if config.output is not None:
        write_text(config.output, text)
    return EXIT_OK


def cmd_gradcheck(config: RunConfig) -> int:
    reports = gradcheck_suite(config.hyper.seed, inject_fault=config.inject_fault)
    for report in reports:
        print(report.format())
    failing = sorted({name for report in reports for name in report.failing})
    if failing:
        log_error(logger, LogModules.GRADCHECK, "gradcheck", "gradient mismatch", blocks=",".join(failing))
        print(f"FAILED: {', '.join(failing)}")
        return EXIT_CHECK_FAILED
    print("PASSED")
    return EXIT_OK


def cmd_score(config: RunConfig) -> int:
    if config.triples is not None:
        config.require("triples")
        report = score_triples(read_text(config.triples))
    else:
        config.require("pred", "gold")
        report = score(read_text(config.pred), read_text(config.gold))
    print(format_score_report(report), end="")
    return EXIT_OK


# ============================================================================
# Registry
# ============================================================================

COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "corrupt": cmd_corrupt,
    "build-dict": cmd_build_dict,
    "train": cmd_train,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
    "gradcheck": cmd_gradcheck,
    "dump-reprs": cmd_dump_reprs,
    "synth": cmd_synth,
    "score": cmd_score,
}
