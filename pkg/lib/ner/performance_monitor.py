"""
Performance Monitoring Module for the Span NER Engine

Tracks wall time of training steps and their phases (forward, backward,
update) in a rolling window. Purely observational: nothing it measures feeds
back into training, so results stay deterministic.

Author: SpanNER Team
Date: 2025-02-09
"""

import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .constants import PERF_MONITOR_WINDOW_SIZE


# ============================================================================
# Data Classes
# ============================================================================

@dataclass
class PerformanceStats:
    """Aggregate step statistics over the current window"""
    mean_ms: float
    median_ms: float
    p95_ms: float
    max_ms: float
    samples: int


# ============================================================================
# Performance Monitor Class
# ============================================================================

class PerformanceMonitor:
    """
    Rolling-window timing of training steps.

    Example:
        perf = PerformanceMonitor(logger)
        perf.start_step()
        with perf.timed_phase('forward'):
            fwd = forward_batch(...)
        perf.end_step()
        perf.log_summary("epoch 3")
    """

    def __init__(self, logger: logging.Logger, window_size: int = PERF_MONITOR_WINDOW_SIZE):
        self.logger = logger
        self.window_size = window_size
        self._step_times = deque(maxlen=window_size)
        self._phase_times: Dict[str, deque] = {}
        self._step_start: Optional[float] = None
        self._total_steps = 0

    # ========================================================================
    # Step Timing
    # ========================================================================

    def start_step(self):
        self._step_start = time.perf_counter()

    def end_step(self):
        if self._step_start is None:
            self.logger.warning("[PerfMonitor] end_step() called without start_step()")
            return
        self._step_times.append((time.perf_counter() - self._step_start) * 1000)
        self._step_start = None
        self._total_steps += 1

    # ========================================================================
    # Context Manager for Timed Phases
    # ========================================================================

    class TimedPhase:
        """Context manager for timing a code block"""

        def __init__(self, monitor: 'PerformanceMonitor', phase_name: str):
            self.monitor = monitor
            self.phase_name = phase_name
            self._start = 0.0

        def __enter__(self):
            self._start = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc_val, exc_tb):
            elapsed_ms = (time.perf_counter() - self._start) * 1000
            times = self.monitor._phase_times.setdefault(self.phase_name,
                                                          deque(maxlen=self.monitor.window_size))
            times.append(elapsed_ms)
            return False

    def timed_phase(self, phase_name: str) -> 'PerformanceMonitor.TimedPhase':
        return self.TimedPhase(self, phase_name)

    # ========================================================================
    # Statistics
    # ========================================================================

    @staticmethod
    def _stats(data) -> Optional[PerformanceStats]:
        if not data:
            return None
        arr = np.asarray(data)
        return PerformanceStats(
            mean_ms=float(np.mean(arr)),
            median_ms=float(np.median(arr)),
            p95_ms=float(np.percentile(arr, 95)),
            max_ms=float(np.max(arr)),
            samples=len(arr),
        )

    def get_stats(self) -> Optional[PerformanceStats]:
        """Step statistics, or None before the first step"""
        return self._stats(self._step_times)

    def get_phase_stats(self) -> Dict[str, PerformanceStats]:
        return {name: self._stats(times) for name, times in self._phase_times.items() if times}

    @property
    def total_steps(self) -> int:
        return self._total_steps

    def log_summary(self, context: str):
        """One DEBUG line for the steps and one per phase"""
        stats = self.get_stats()
        if stats is None:
            return
        self.logger.debug(f"[PerfMonitor] {context}: steps={stats.samples}, mean={stats.mean_ms:.2f}ms, "
                          f"median={stats.median_ms:.2f}ms, p95={stats.p95_ms:.2f}ms, max={stats.max_ms:.2f}ms")
        for name, phase in self.get_phase_stats().items():
            self.logger.debug(f"[PerfMonitor] {context}: phase={name}, mean={phase.mean_ms:.2f}ms, "
                              f"p95={phase.p95_ms:.2f}ms")


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-09"
__description__ = "Training step timing for the span NER engine"
