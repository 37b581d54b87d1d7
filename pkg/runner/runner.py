"""
Runner for the Span NER Engine

Entry point of every command: parses the command line, loads the YAML
config, sets up logging, layers flags over file values, echoes the effective
configuration and dispatches to the command handler.

Exit codes:
    0  success
    1  check failure (gradcheck)
    2  usage or configuration error, missing or malformed input
    3  numeric abort (non-finite loss or gradient)

Usage:
    python -m runner train --config config.yaml --train train.bio --dev dev.bio

Author: SpanNER Team
Date: 2025-02-14
"""

import logging
import sys
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError as ConfigValidationError

from lib.ner.constants import EXIT_NUMERIC, EXIT_USAGE
from lib.ner.logging_conventions import LogModules, log_error, log_validation_error
from lib.ner.validation import (
    AlignmentError,
    BinaryFormatError,
    BioFormatError,
    MissingSentenceError,
    NumericError,
    ValidationError,
)

from runner.command_parser import overrides_from_args, parse_command_line
from runner.commands import COMMANDS
from runner.logging_handler import setup_logging
from runner.models import build_run_config

logger = logging.getLogger("runner")

SERVICE_NAME = "runner"

# Errors in the referenced inputs; reported as usage errors
INPUT_ERRORS = (ValidationError, BioFormatError, BinaryFormatError, AlignmentError, MissingSentenceError,
                FileNotFoundError, IsADirectoryError)


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Flat YAML mapping; no file means all defaults."""
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        values = yaml.safe_load(f)
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ValidationError(f"{path}: config must be a mapping", field="config")
    return values


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_command_line(argv)

    try:
        file_values = load_config_file(args.config)
    except (OSError, yaml.YAMLError, ValidationError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging_config = dict(file_values.get("logging") or {})
    if args.log_level:
        logging_config["level"] = args.log_level
        logging_config.pop(SERVICE_NAME, None)
    try:
        buffer = setup_logging(logging_config, SERVICE_NAME)
    except (ValueError, OSError) as e:
        print(f"error: invalid logging configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        config = build_run_config(file_values, overrides_from_args(args))
    except ConfigValidationError as e:
        log_validation_error(logger, LogModules.CONFIG, "invalid configuration", errors=e.error_count())
        print(f"error: invalid configuration\n{e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"[{LogModules.MAIN}] Command {args.command}, effective configuration: {config.to_json()}")

    try:
        code = COMMANDS[args.command](config)
    except NumericError as e:
        log_error(logger, LogModules.MAIN, args.command, str(e), parameter=e.parameter)
        print(f"error: numeric abort: {e}", file=sys.stderr)
        code = EXIT_NUMERIC
    except INPUT_ERRORS as e:
        log_error(logger, LogModules.MAIN, args.command, str(e))
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_USAGE

    if config.run_log is not None:
        buffer.write(config.run_log)
    return code


if __name__ == "__main__":
    sys.exit(main())
