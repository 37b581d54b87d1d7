"""
Numeric diagnostic counters.

Clamps, degenerate vectors and skipped loss terms are counted here and
reported as warnings, never swallowed.
"""

import logging
from dataclasses import dataclass, fields

from .logging_conventions import log_warning


@dataclass
class NumericCounters:
    clamped_probabilities: int = 0  # p(gold) below the cross-entropy floor
    degenerate_vectors: int = 0  # norm below the cosine floor
    skipped_contrastive_terms: int = 0  # labels with N_l < 2 or no negatives
    missing_centroids: int = 0  # labels with no retrieval entry

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def any(self) -> bool:
        return any(getattr(self, f.name) for f in fields(self))

    def report(self, logger: logging.Logger, module_name: str, context: str):
        """One warning line per non-zero counter."""
        for name, value in self.as_dict().items():
            if value:
                log_warning(logger, module_name, f"{context}: {name.replace('_', ' ')}", count=value)
