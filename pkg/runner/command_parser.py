"""
Command Parser Module for the Span NER Runner

Builds the command-line surface: one subcommand per pipeline step, common
flags (--config, --seed, --log-level) on every subcommand, and per-command
path and override flags. Flag destinations are RunConfig / Hyperparams keys,
so parsed flags layer directly over config-file values.

Author: SpanNER Team
Date: 2025-02-14
"""

import argparse
from typing import Any, Dict, List, Optional

from lib.ner.constants import ALL_VARIANTS

# Namespace entries that are not configuration overrides
NON_OVERRIDE_KEYS = ("command", "config", "log_level")


# ============================================================================
# Flag Groups
# ============================================================================

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML run configuration")
    common.add_argument("--seed", type=int, default=None, help="Seed of every random stream")
    common.add_argument("--log-level", default=None, help="Override logging.level")
    return common


def _hyper_parser() -> argparse.ArgumentParser:
    hyper = argparse.ArgumentParser(add_help=False)
    hyper.add_argument("--epochs", type=int, default=None)
    hyper.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float, default=None)
    hyper.add_argument("--batch-size", type=int, default=None)
    hyper.add_argument("--lambda", dest="lambda_", type=float, default=None, help="Contrastive loss weight")
    hyper.add_argument("--alpha", type=float, default=None, help="Retrieval weight at inference")
    hyper.add_argument("--tau", type=float, default=None)
    hyper.add_argument("--neg-ratio", type=float, default=None)
    hyper.add_argument("--no-negative-sampling", dest="negative_sampling", action="store_false", default=None,
                       help="Use every non-gold span as a negative")
    hyper.add_argument("--dropout-rate", type=float, default=None)
    hyper.add_argument("--max-span-len", type=int, default=None)
    hyper.add_argument("--min-token-count", type=int, default=None,
                       help="Rarer training tokens share the UNK embedding")
    return hyper


def _path(parser: argparse.ArgumentParser, *names: str):
    for name in names:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser of every runner command.

    Example:
        >>> args = build_parser().parse_args(["train", "--train", "train.bio", "--dev", "dev.bio"])
        >>> args.command
        'train'
    """
    common, hyper = _common_parser(), _hyper_parser()
    parser = argparse.ArgumentParser(prog="spanner", description="Span NER with contrastive training "
                                     "and retrieval-augmented inference")
    sub = parser.add_subparsers(dest="command", required=True)

    corrupt = sub.add_parser("corrupt", parents=[common], help="Build a noisy training set")
    corrupt.add_argument("--mode", choices=["dict", "rate"], default=None)
    corrupt.add_argument("--drop-prob", type=float, default=None)
    _path(corrupt, "input", "raw", "dictionary", "output", "stats", "run_log")

    build_dict = sub.add_parser("build-dict", parents=[common], help="Entity dictionary from a BIO file")
    _path(build_dict, "input", "output", "run_log")

    train = sub.add_parser("train", parents=[common, hyper], help="Train a model")
    train.add_argument("--log-wall-time", action="store_true", default=None)
    _path(train, "train", "dev", "features", "checkpoint", "centroids", "training_log", "run_log")

    evaluate = sub.add_parser("eval", parents=[common, hyper], help="Decode and score a test set")
    _path(evaluate, "checkpoint", "centroids", "test", "features", "output", "run_log")

    experiment = sub.add_parser("experiment", parents=[common, hyper], help="Multi-seed experiment")
    experiment.add_argument("--experiment", choices=["robustness", "batch_sweep", "ablation"], default=None)
    experiment.add_argument("--variants", type=_str_list, default=None,
                            help=f"Comma-separated subset of {','.join(ALL_VARIANTS)}")
    experiment.add_argument("--seeds", type=_int_list, default=None, help="Comma-separated seeds")
    experiment.add_argument("--sizes", type=_int_list, default=None, help="Comma-separated batch sizes")
    experiment.add_argument("--drop-prob", type=float, default=None)
    experiment.add_argument("--synthetic", action="store_true", default=None)
    experiment.add_argument("--parallel", action="store_true", default=None)
    _path(experiment, "train", "dev", "test", "extra", "output", "run_log")

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="Finite-difference gradient check")
    gradcheck.add_argument("--inject-fault", choices=["E", "U", "b", "W", "V"], default=None,
                           help="Corrupt one analytic gradient block")

    dump = sub.add_parser("dump-reprs", parents=[common, hyper], help="Write projected span vectors")
    _path(dump, "checkpoint", "input", "features", "output")

    synth = sub.add_parser("synth", parents=[common], help="Write a synthetic corpus")
    for name in ("n_train", "n_dev", "n_test", "n_extra"):
        synth.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=None)
    synth.add_argument("--dictionary-fraction", type=float, default=None)
    _path(synth, "output_dir")

    score = sub.add_parser("score", parents=[common], help="Score BIO files without a model")
    _path(score, "pred", "gold", "triples")

    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags that were given, keyed by config name."""
    return {k: v for k, v in vars(args).items() if k not in NON_OVERRIDE_KEYS and v is not None}


def parse_command_line(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse argv; usage errors exit with status 2."""
    return build_parser().parse_args(argv)
