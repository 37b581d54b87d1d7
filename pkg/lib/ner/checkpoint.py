"""
Model checkpoint file.

Layout: magic, version, u32 section count, then named sections in a fixed
order. Each section is a name, a u8 kind and a payload:

    kind 0  array   u8 ndim, u32 dims, float32 values
    kind 1  blob    u32 length, UTF-8 bytes
    kind 2  int     i64

Sections: meta (encoder kind), labels, non_entity, hyper (JSON), seed,
then vocab, E, U, b for window models, then W, V.
"""

import json
import logging
from typing import Dict, Tuple, Union

import numpy as np

from .binary_format import BinaryReader, BinaryWriter, PathLike
from .constants import CHECKPOINT_MAGIC
from .corpus import LabelSet
from .encoder import ENCODER_WINDOW, Vocabulary, WindowEncoderParams
from .hyperparams import Hyperparams
from .logging_conventions import LogModules, log_debug
from .span_model import ModelParams, ScoringParams
from .validation import BinaryFormatError, ContractViolation

logger = logging.getLogger(__name__)

KIND_ARRAY = 0
KIND_BLOB = 1
KIND_INT = 2

SectionValue = Union[np.ndarray, str, int]


def _sections(params: ModelParams, hyper: Hyperparams) -> Dict[str, SectionValue]:
    sections: Dict[str, SectionValue] = {
        "meta": json.dumps({"encoder": params.encoder_kind}, sort_keys=True),
        "labels": "\n".join(params.label_set.labels),
        "non_entity": params.label_set.non_entity_index,
        "hyper": hyper.to_json(),
        "seed": hyper.seed,
    }
    if params.encoder is not None:
        sections["vocab"] = "\n".join(params.encoder.vocab.tokens)
        sections.update(E=params.encoder.E, U=params.encoder.U, b=params.encoder.b)
    sections.update(W=params.scoring.W, V=params.scoring.V)
    return sections


def save_checkpoint(path: PathLike, params: ModelParams, hyper: Hyperparams):
    """Write a checkpoint; equal parameters and hyperparameters give byte-equal files."""
    writer = BinaryWriter(CHECKPOINT_MAGIC)
    sections = _sections(params, hyper)
    writer.u32(len(sections))
    for name, value in sections.items():
        writer.text(name)
        if isinstance(value, np.ndarray):
            writer.u8(KIND_ARRAY)
            writer.array(value)
        elif isinstance(value, str):
            writer.u8(KIND_BLOB)
            writer.blob(value.encode("utf-8"))
        else:
            writer.u8(KIND_INT)
            writer.i64(int(value))
    writer.write(path)
    log_debug(logger, LogModules.CHECKPOINT, "Saved checkpoint", path=path, sections=len(sections))


def _read_sections(reader: BinaryReader) -> Dict[str, SectionValue]:
    sections: Dict[str, SectionValue] = {}
    for _ in range(reader.u32()):
        name = reader.text()
        kind = reader.u8()
        if kind == KIND_ARRAY:
            sections[name] = reader.array()
        elif kind == KIND_BLOB:
            sections[name] = reader.blob().decode("utf-8")
        elif kind == KIND_INT:
            sections[name] = reader.i64()
        else:
            raise BinaryFormatError(f"{reader.source}: section '{name}' has unknown kind {kind}")
    reader.expect_end()
    return sections


def load_checkpoint(path: PathLike) -> Tuple[ModelParams, Hyperparams]:
    """
    Read a checkpoint back into model parameters and hyperparameters.

    Raises:
        BinaryFormatError: bad header, missing section or inconsistent shapes
    """
    sections = _read_sections(BinaryReader.open(path, CHECKPOINT_MAGIC))
    try:
        meta = json.loads(sections["meta"])
        label_set = LabelSet(tuple(sections["labels"].split("\n")), int(sections["non_entity"]))
        hyper = Hyperparams.model_validate_json(sections["hyper"])
        scoring = ScoringParams(sections["W"], sections["V"])
        encoder = None
        if meta["encoder"] == ENCODER_WINDOW:
            vocab = Vocabulary(tuple(sections["vocab"].split("\n")))
            encoder = WindowEncoderParams(vocab, sections["E"], sections["U"], sections["b"])
        params = ModelParams(label_set, scoring, encoder, meta["encoder"])
    except KeyError as e:
        raise BinaryFormatError(f"{path}: missing section {e}")
    except (ContractViolation, ValueError) as e:
        raise BinaryFormatError(f"{path}: inconsistent checkpoint ({e})")
    log_debug(logger, LogModules.CHECKPOINT, "Loaded checkpoint", path=path, encoder=params.encoder_kind)
    return params, hyper
