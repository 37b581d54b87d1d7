"""
Binary Artifact Format Module

Low-level framing shared by every binary artifact the engine writes
(checkpoints, centroid tables, precomputed features, representation dumps).

File Structure:
---------------
- Magic: 8 bytes, identifies the artifact kind
- Version: u16 little-endian
- Body: artifact specific, built from the primitives below

Primitives (all little-endian):
- u8 / u16 / u32 / i64 integers
- text: u16 byte length + UTF-8 bytes
- blob: u32 byte length + raw bytes
- f32 block: count floats, float32
- array: u8 ndim + u32 per dim + f32 block

Writers are deterministic, so equal inputs produce byte-equal files.

Author: SpanNER Team
Date: 2025-02-05
"""

import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .constants import FORMAT_VERSION
from .validation import BinaryFormatError

logger = logging.getLogger(__name__)

# ============================================================================
# Format Constants
# ============================================================================

MAGIC_LENGTH = 8

U8 = struct.Struct('<B')
U16 = struct.Struct('<H')
U32 = struct.Struct('<I')
I64 = struct.Struct('<q')

FLOAT_DTYPE = np.dtype('<f4')

PathLike = Union[str, Path]


# ============================================================================
# Writer
# ============================================================================

class BinaryWriter:
    """Append-only little-endian byte builder."""

    def __init__(self, magic: bytes, version: int = FORMAT_VERSION):
        if len(magic) != MAGIC_LENGTH:
            raise ValueError(f"magic must be {MAGIC_LENGTH} bytes, got {len(magic)}")
        self._parts = [magic, U16.pack(version)]

    def u8(self, value: int):
        self._parts.append(U8.pack(value))

    def u16(self, value: int):
        self._parts.append(U16.pack(value))

    def u32(self, value: int):
        self._parts.append(U32.pack(value))

    def i64(self, value: int):
        self._parts.append(I64.pack(value))

    def text(self, value: str):
        data = value.encode("utf-8")
        self.u16(len(data))
        self._parts.append(data)

    def blob(self, data: bytes):
        """u32 length + raw bytes, for payloads that may exceed 64 KiB."""
        self.u32(len(data))
        self._parts.append(data)

    def floats(self, values: np.ndarray):
        """Raw float32 block, no length prefix."""
        self._parts.append(np.ascontiguousarray(values, dtype=FLOAT_DTYPE).tobytes())

    def array(self, values: np.ndarray):
        """Shape-prefixed float32 array."""
        values = np.asarray(values)
        self.u8(values.ndim)
        for dim in values.shape:
            self.u32(dim)
        self.floats(values)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)

    def write(self, path: PathLike):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.getvalue())


# ============================================================================
# Reader
# ============================================================================

class BinaryReader:
    """
    Cursor over an artifact's bytes.

    Construction checks magic and version; every read past the end raises
    BinaryFormatError.
    """

    def __init__(self, data: bytes, magic: bytes, source: str = "<bytes>"):
        self.data = data
        self.source = source
        self.offset = 0
        found = self._take(MAGIC_LENGTH)
        if found != magic:
            raise BinaryFormatError(f"{source}: bad magic {found!r}, expected {magic!r}")
        self.version = self.u16()
        if self.version != FORMAT_VERSION:
            raise BinaryFormatError(f"{source}: unsupported version {self.version}")

    @classmethod
    def open(cls, path: PathLike, magic: bytes) -> "BinaryReader":
        return cls(Path(path).read_bytes(), magic, str(path))

    def _take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise BinaryFormatError(f"{self.source}: truncated at byte {self.offset} (needed {size})")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def u8(self) -> int:
        return U8.unpack(self._take(U8.size))[0]

    def u16(self) -> int:
        return U16.unpack(self._take(U16.size))[0]

    def u32(self) -> int:
        return U32.unpack(self._take(U32.size))[0]

    def i64(self) -> int:
        return I64.unpack(self._take(I64.size))[0]

    def text(self) -> str:
        length = self.u16()
        try:
            return self._take(length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise BinaryFormatError(f"{self.source}: invalid UTF-8 string ({e})")

    def blob(self) -> bytes:
        return self._take(self.u32())

    def floats(self, count: int) -> np.ndarray:
        """float32 block widened to float64 (exact)."""
        raw = self._take(count * FLOAT_DTYPE.itemsize)
        return np.frombuffer(raw, dtype=FLOAT_DTYPE).astype(np.float64)

    def array(self) -> np.ndarray:
        ndim = self.u8()
        shape: Tuple[int, ...] = tuple(self.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        return self.floats(count).reshape(shape)

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self.data)

    def expect_end(self):
        if not self.exhausted:
            raise BinaryFormatError(f"{self.source}: {len(self.data) - self.offset} trailing bytes")


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-05"
__description__ = "Little-endian framing primitives for binary artifacts"
