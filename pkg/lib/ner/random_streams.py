"""
Seeded random streams.

Every random draw in the engine comes from a generator derived from the single
run seed, a stream label, and optional integer indices (epoch, sentence id,
batch index). Equal inputs always give the same stream, independent of the
order in which streams are requested.
"""

import zlib
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


def label_hash(label: str) -> int:
    """Stable 32-bit hash of a stream label (unlike hash(), not salted per process)."""
    return zlib.crc32(label.encode("utf-8")) & 0xFFFFFFFF


def stream_entropy(seed: int, label: str, *indices: int) -> list:
    """Entropy list for SeedSequence: [seed, crc32(label), *indices]."""
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, label_hash(label), *(int(i) for i in indices)]


def derive_rng(seed: int, label: str, *indices: int) -> np.random.Generator:
    """
    Generator for the labeled subsystem stream.

    Example:
        >>> rng = derive_rng(13, "negatives", 2, 417)  # epoch 2, sentence 417
    """
    return np.random.default_rng(np.random.SeedSequence(stream_entropy(seed, label, *indices)))
