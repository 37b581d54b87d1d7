"""
Logging Conventions and Helper Utilities for the Span NER Engine

This module provides standardized logging utilities to ensure consistent
logging patterns across the library and the runner.

Author: SpanNER Team
Date: 2025-02-03
"""

import logging
import time
from typing import Optional


# ============================================================================
# Logging Conventions
# ============================================================================
"""
STANDARDIZED LOGGING FORMAT:

All log messages should follow this pattern:
    logger.level(f"[ModuleName] Message with {variables}")

Examples:
    logger.info(f"[Training] Epoch 3 finished: loss_final=12.4031, dev_f1=81.20")
    logger.debug(f"[Contrastive] Skipping label without negatives: label={label}")
    logger.warning(f"[Corpus] Warning: Orphan I- tag started a span (line=42)")
    logger.error(f"[Checkpoint] Error in load: bad magic (path=model.bin)")

RULES:
1. Use module/class name in square brackets [ModuleName] at the start
2. Use f-strings for variable interpolation
3. Include relevant context variables in log messages
4. NEVER use print() in library code - always use logger (the CLI prints reports)
5. Log levels:
   - DEBUG: Per-batch values, timing statistics
   - INFO: Epoch summaries, artifacts written, effective configuration
   - WARNING: Clamps, degenerate vectors, skipped terms, missing centroids
   - ERROR: Failures that abort a command
"""


# ============================================================================
# Module Name Registry
# ============================================================================

class LogModules:
    """Standardized module names for logging"""

    # Library
    CORPUS = "Corpus"
    SYNTHETIC = "Synthetic"
    ENCODER = "Encoder"
    RAI = "RAI"
    TRAINING = "Training"
    GRADCHECK = "GradCheck"
    EVAL = "Eval"
    EXPERIMENT = "Experiment"
    CHECKPOINT = "Checkpoint"

    # Runner
    MAIN = "Main"
    CONFIG = "Config"


# ============================================================================
# Logging Helper Functions
# ============================================================================

def _emit(logger: logging.Logger, level: int, module_name: str, text: str, params: dict,
          separator: str = " ({})"):
    """One `[Module] text` line; context pairs go after the text, formatted with separator."""
    line = f"[{module_name}] {text}"
    if params:
        line += separator.format(", ".join(f"{k}={v}" for k, v in params.items()))
    logger.log(level, line)


def log_operation_init(logger: logging.Logger, module_name: str, operation: str, **kwargs):
    """
    Example:
        log_operation_init(logger, LogModules.TRAINING, "training", epochs=30, batch_size=16)
        Output: "[Training] Initializing training: epochs=30, batch_size=16"
    """
    _emit(logger, logging.INFO, module_name, f"Initializing {operation}", kwargs, ": {}")


def log_operation_complete(logger: logging.Logger, module_name: str, operation: Optional[str] = None, **kwargs):
    """
    Example:
        log_operation_complete(logger, LogModules.EVAL, "Scoring", f1=91.3)
        Output: "[Eval] Scoring finished: f1=91.3"
    """
    _emit(logger, logging.INFO, module_name, f"{operation or 'Execution'} finished", kwargs, ": {}")


def log_validation_error(logger: logging.Logger, module_name: str, reason: str, **kwargs):
    """
    Example:
        log_validation_error(logger, LogModules.CONFIG, "tau must be positive", tau=0)
        Output: "[Config] Validation failed: tau must be positive (tau=0)"
    """
    _emit(logger, logging.ERROR, module_name, f"Validation failed: {reason}", kwargs)


def log_error(logger: logging.Logger, module_name: str, operation: str, error: str, **kwargs):
    """
    Example:
        log_error(logger, LogModules.TRAINING, "backward", "non-finite gradient", parameter="W")
        Output: "[Training] Error in backward: non-finite gradient (parameter=W)"
    """
    _emit(logger, logging.ERROR, module_name, f"Error in {operation}: {error}", kwargs)


def log_warning(logger: logging.Logger, module_name: str, message: str, **kwargs):
    """
    Example:
        log_warning(logger, LogModules.RAI, "Label has no centroid", label="ORG")
        Output: "[RAI] Warning: Label has no centroid (label=ORG)"
    """
    _emit(logger, logging.WARNING, module_name, f"Warning: {message}", kwargs)


def log_debug(logger: logging.Logger, module_name: str, message: str, **kwargs):
    _emit(logger, logging.DEBUG, module_name, message, kwargs)


# ============================================================================
# Context Manager for Timed Operations
# ============================================================================

class LoggedOperation:
    """
    Logs the start and end of a block with its elapsed wall time.

    Example:
        with LoggedOperation(logger, LogModules.RAI, "centroid table build"):
            table = build_centroid_table(...)

        [RAI] Starting centroid table build...
        [RAI] Completed centroid table build (elapsed=0.113s)
    """

    def __init__(self, logger: logging.Logger, module_name: str, operation: str, level: int = logging.INFO):
        self.logger = logger
        self.module_name = module_name
        self.operation = operation
        self.level = level
        self.started = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "LoggedOperation":
        self.started = time.perf_counter()
        self.logger.log(self.level, f"[{self.module_name}] Starting {self.operation}...")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.elapsed = time.perf_counter() - self.started
        if exc_type is None:
            self.logger.log(self.level, f"[{self.module_name}] Completed {self.operation} "
                                        f"(elapsed={self.elapsed:.3f}s)")
        else:
            self.logger.error(f"[{self.module_name}] Failed {self.operation} after {self.elapsed:.3f}s: {exc_val}")
        return False


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-03"
__description__ = "Logging conventions and utilities for the span NER engine"
