"""
Encoder Module for the Span NER Engine

Per-token hidden vectors h_1..h_n behind one interface, with two
implementations:

- WindowEncoder: trainable context-window encoder,
  h_i = tanh(U [e_{i-1}; e_i; e_{i+1}] + b), zero vectors beyond the edges
- PrecomputedEncoder: frozen vectors loaded from a features file

Both expose forward(sentences) / backward(cache, d_hidden) so the training
loop treats them alike; the frozen encoder has no parameters and returns no
gradients.

Author: SpanNER Team
Date: 2025-02-05
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .binary_format import BinaryReader, BinaryWriter, PathLike
from .constants import (
    DEFAULT_EMBED_DIM,
    DEFAULT_HIDDEN_DIM,
    FEATURES_MAGIC,
    INIT_SCALE,
    UNK_INDEX,
    UNK_TOKEN,
    WINDOW_RADIUS,
)
from .corpus import Sentence
from .logging_conventions import LogModules, log_debug
from .validation import BinaryFormatError, ContractViolation, MissingSentenceError, Validator

logger = logging.getLogger(__name__)

HiddenSequence = np.ndarray  # (n, d_h) float64, one row per token

ENCODER_WINDOW = "window"
ENCODER_PRECOMPUTED = "precomputed"


# ============================================================================
# Vocabulary
# ============================================================================

@dataclass(frozen=True)
class Vocabulary:
    """Token -> embedding row; row UNK_INDEX is reserved for unknown tokens."""
    tokens: Tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens or self.tokens[UNK_INDEX] != UNK_TOKEN:
            raise ContractViolation("vocabulary must start with the UNK token", field="tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ContractViolation("vocabulary tokens must be unique", field="tokens")
        object.__setattr__(self, "_rows", {tok: i for i, tok in enumerate(self.tokens)})

    @classmethod
    def build(cls, sentences: Iterable[Sentence], min_count: int = 1) -> "Vocabulary":
        """
        Sorted training tokens seen at least min_count times, after the UNK row.

        Independent of sentence order. With min_count > 1 rare tokens such as
        one-off names fall to the UNK row, which then gets trained too.
        """
        Validator.validate_range(min_count, "min_count", min_val=1)
        counts = Counter(tok for sentence in sentences for tok in sentence.tokens)
        counts.pop(UNK_TOKEN, None)
        kept = sorted(tok for tok, count in counts.items() if count >= min_count)
        log_debug(logger, LogModules.ENCODER, "Built vocabulary", tokens=len(kept),
                  unknown=len(counts) - len(kept), min_count=min_count)
        return cls((UNK_TOKEN,) + tuple(kept))

    def __len__(self) -> int:
        return len(self.tokens)

    def row(self, token: str) -> int:
        return self._rows.get(token, UNK_INDEX)

    def rows(self, tokens: Sequence[str]) -> np.ndarray:
        return np.fromiter((self.row(t) for t in tokens), dtype=np.int64, count=len(tokens))


# ============================================================================
# Window Encoder
# ============================================================================

@dataclass
class WindowEncoderParams:
    vocab: Vocabulary
    E: np.ndarray  # |vocab| x d_e
    U: np.ndarray  # d_h x 3 d_e
    b: np.ndarray  # d_h

    def __post_init__(self):
        self.validate()

    @property
    def embed_dim(self) -> int:
        return self.E.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    def validate(self):
        if self.E.ndim != 2 or self.E.shape[0] != len(self.vocab):
            raise ContractViolation("E must have one row per vocabulary entry", field="E", value=self.E.shape)
        window = 2 * WINDOW_RADIUS + 1
        if self.U.shape != (self.U.shape[0], window * self.E.shape[1]):
            raise ContractViolation(f"U must be d_h x {window}*d_e", field="U", value=self.U.shape)
        if self.b.shape != (self.U.shape[0],):
            raise ContractViolation("b must have length d_h", field="b", value=self.b.shape)
        for name in ("E", "U", "b"):
            Validator.validate_finite(getattr(self, name), name)

    @classmethod
    def initialize(cls, vocab: Vocabulary, rng: np.random.Generator,
                   embed_dim: int = DEFAULT_EMBED_DIM, hidden_dim: int = DEFAULT_HIDDEN_DIM,
                   scale: float = INIT_SCALE) -> "WindowEncoderParams":
        """uniform(-scale, scale) for E, U and b, drawn in that order."""
        E = rng.uniform(-scale, scale, size=(len(vocab), embed_dim))
        U = rng.uniform(-scale, scale, size=(hidden_dim, (2 * WINDOW_RADIUS + 1) * embed_dim))
        b = rng.uniform(-scale, scale, size=hidden_dim)
        return cls(vocab, E, U, b)

    @classmethod
    def zeros(cls, vocab: Vocabulary, embed_dim: int, hidden_dim: int) -> "WindowEncoderParams":
        return cls(vocab, np.zeros((len(vocab), embed_dim)),
                   np.zeros((hidden_dim, (2 * WINDOW_RADIUS + 1) * embed_dim)), np.zeros(hidden_dim))

    def copy(self) -> "WindowEncoderParams":
        return WindowEncoderParams(self.vocab, self.E.copy(), self.U.copy(), self.b.copy())


def window_rows(sentence: Sentence, vocab: Vocabulary) -> np.ndarray:
    """
    (n, 3) embedding row indices for [i-1, i, i+1]; -1 marks padding.
    """
    rows = vocab.rows(sentence.tokens)
    n = len(rows)
    window = np.full((n, 2 * WINDOW_RADIUS + 1), -1, dtype=np.int64)
    for slot, offset in enumerate(range(-WINDOW_RADIUS, WINDOW_RADIUS + 1)):
        lo, hi = max(0, -offset), min(n, n - offset)
        window[lo:hi, slot] = rows[lo + offset:hi + offset]
    return window


@dataclass
class WindowCache:
    windows: np.ndarray  # (total tokens, 3) row indices, -1 = padding
    X: np.ndarray  # (total tokens, 3 d_e)
    H: np.ndarray  # (total tokens, d_h)
    lengths: Tuple[int, ...]


class WindowEncoder:
    """Trainable radius-1 window encoder over a shared embedding table."""

    kind = ENCODER_WINDOW
    trainable = True

    def __init__(self, params: WindowEncoderParams):
        self.params = params

    @property
    def hidden_dim(self) -> int:
        return self.params.hidden_dim

    def _inputs(self, windows: np.ndarray) -> np.ndarray:
        E = self.params.E
        padded = np.vstack([E, np.zeros((1, E.shape[1]))])  # row -1 is the zero pad
        return padded[windows].reshape(len(windows), -1)

    def encode(self, sentence: Sentence) -> HiddenSequence:
        return self.forward([sentence])[0][0]

    def forward(self, sentences: Sequence[Sentence]) -> Tuple[List[HiddenSequence], WindowCache]:
        """Encode a batch with one matrix product; the per-sentence results equal encode()."""
        windows = np.concatenate([window_rows(s, self.params.vocab) for s in sentences])
        X = self._inputs(windows)
        H = np.tanh(X @ self.params.U.T + self.params.b)
        lengths = tuple(len(s) for s in sentences)
        splits = np.cumsum(lengths)[:-1]
        return np.split(H, splits), WindowCache(windows, X, H, lengths)

    def backward(self, cache: WindowCache, d_hidden: Sequence[np.ndarray]) -> Dict[str, np.ndarray]:
        """Gradients w.r.t. E, U and b given dL/dh for every token of the batch."""
        dH = np.concatenate(d_hidden)
        dA = dH * (1.0 - cache.H ** 2)
        dU = dA.T @ cache.X
        db = dA.sum(axis=0)
        dX = (dA @ self.params.U).reshape(len(cache.windows), cache.windows.shape[1], -1)
        dE_padded = np.zeros((self.params.E.shape[0] + 1, self.params.E.shape[1]))
        np.add.at(dE_padded, cache.windows, dX)
        return {"E": dE_padded[:-1], "U": dU, "b": db}


def encode_window(sentence: Sentence, params: WindowEncoderParams) -> HiddenSequence:
    """
    h_i = tanh(U [e_{i-1}; e_i; e_{i+1}] + b) for every token.

    Example:
        >>> H = encode_window(Sentence(0, ("EU", "rejects")), params)
        >>> H.shape  # (2, d_h)
    """
    return WindowEncoder(params).encode(sentence)


# ============================================================================
# Precomputed Encoder
# ============================================================================

class PrecomputedEncoder:
    """Frozen per-sentence vectors keyed by sentence id."""

    kind = ENCODER_PRECOMPUTED
    trainable = False

    def __init__(self, vectors: Mapping[int, np.ndarray], hidden_dim: int):
        self.vectors = dict(vectors)
        self._hidden_dim = hidden_dim
        for sentence_id, H in self.vectors.items():
            if H.ndim != 2 or H.shape[1] != hidden_dim:
                raise BinaryFormatError(f"sentence {sentence_id}: vectors of shape {H.shape}, "
                                        f"expected (n, {hidden_dim})")

    @property
    def hidden_dim(self) -> int:
        return self._hidden_dim

    def __contains__(self, sentence_id: int) -> bool:
        return sentence_id in self.vectors

    def encode(self, sentence: Sentence) -> HiddenSequence:
        try:
            H = self.vectors[sentence.id]
        except KeyError:
            raise MissingSentenceError(f"no precomputed vectors for sentence {sentence.id}")
        if H.shape[0] != len(sentence):
            raise BinaryFormatError(f"sentence {sentence.id}: {H.shape[0]} stored vectors "
                                    f"for {len(sentence)} tokens")
        return H

    def forward(self, sentences: Sequence[Sentence]) -> Tuple[List[HiddenSequence], None]:
        return [self.encode(s) for s in sentences], None

    def backward(self, cache, d_hidden) -> Dict[str, np.ndarray]:
        return {}


def save_precomputed(path: PathLike, vectors: Mapping[int, np.ndarray], hidden_dim: Optional[int] = None):
    """
    Write a features file.

    Layout: magic, version, u32 d_h, u32 count, then per sentence in id
    order i64 id, u32 n, n * d_h float32.
    """
    if hidden_dim is None:
        if not vectors:
            raise ContractViolation("hidden_dim is required for an empty features file", field="hidden_dim")
        hidden_dim = next(iter(vectors.values())).shape[1]
    writer = BinaryWriter(FEATURES_MAGIC)
    writer.u32(hidden_dim)
    writer.u32(len(vectors))
    for sentence_id in sorted(vectors):
        H = np.asarray(vectors[sentence_id])
        if H.ndim != 2 or H.shape[1] != hidden_dim:
            raise ContractViolation(f"sentence {sentence_id}: expected (n, {hidden_dim}) vectors",
                                    field="vectors", value=H.shape)
        writer.i64(sentence_id)
        writer.u32(H.shape[0])
        writer.floats(H)
    writer.write(path)


def load_precomputed(path: PathLike, expected_dim: Optional[int] = None) -> PrecomputedEncoder:
    """
    Read a features file into a frozen encoder.

    Raises:
        BinaryFormatError: bad header, truncation, or d_h != expected_dim
    """
    reader = BinaryReader.open(path, FEATURES_MAGIC)
    hidden_dim = reader.u32()
    if expected_dim is not None and hidden_dim != expected_dim:
        raise BinaryFormatError(f"{path}: d_h={hidden_dim}, model expects {expected_dim}")
    vectors = {}
    for _ in range(reader.u32()):
        sentence_id = reader.i64()
        n = reader.u32()
        if sentence_id in vectors:
            raise BinaryFormatError(f"{path}: duplicate sentence id {sentence_id}")
        vectors[sentence_id] = reader.floats(n * hidden_dim).reshape(n, hidden_dim)
    reader.expect_end()
    log_debug(logger, LogModules.ENCODER, "Loaded precomputed features",
              path=path, sentences=len(vectors), d_h=hidden_dim)
    return PrecomputedEncoder(vectors, hidden_dim)


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-05"
__description__ = "Window and precomputed token encoders"
