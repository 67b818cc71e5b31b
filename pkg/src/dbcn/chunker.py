"""Content-defined chunking with a gear rolling hash.

The hash after consuming byte ``i`` is::

    h_i = (h_{i-1} << 1) + GEAR[data[i]]   (mod 2**64)

so it depends only on the last 64 bytes of the stream, never on where the
current chunk started. A boundary is declared after byte ``i`` when the chunk
is at least ``min_size`` long and ``h_i & mask == 0``; a chunk reaching
``max_size`` is cut unconditionally. The mask keeps the low
``boundary_mask_bits`` bits, and those bits depend only on the last
``boundary_mask_bits`` bytes, which is what lets the scan below run as a
handful of vectorised passes instead of a per-byte loop.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .naming import Digest

GEAR_SHA256 = "a64bd241f925658c9df363c580d45d38094e5f1b044c3aa949a95d2cdec0d639"
WINDOW = 64
_BLOCK = 1 << 20


def _load_gear() -> np.ndarray:
    raw = resources.files("dbcn").joinpath("gear.bin").read_bytes()
    if hashlib.sha256(raw).hexdigest() != GEAR_SHA256:
        raise RuntimeError("gear.bin does not match its recorded SHA-256")
    return np.frombuffer(raw, dtype=">u8").astype(np.uint64)


GEAR = _load_gear()


def mask_bits_for(min_size: int, target_size: int) -> int:
    spread = target_size - min_size
    if spread <= 1:
        return 1
    return max(1, math.floor(math.log2(spread) + 0.5))


@dataclass(frozen=True)
class ChunkParams:
    min_size: int = 4096
    target_size: int = 8192
    max_size: int = 16384
    boundary_mask_bits: int = field(default=0)

    def __post_init__(self) -> None:
        if not 0 < self.min_size <= self.target_size <= self.max_size:
            raise ValueError(
                f"need 0 < min <= target <= max, got "
                f"{self.min_size}/{self.target_size}/{self.max_size}"
            )
        expected = mask_bits_for(self.min_size, self.target_size)
        if self.boundary_mask_bits == 0:
            object.__setattr__(self, "boundary_mask_bits", expected)
        elif self.boundary_mask_bits != expected:
            raise ValueError(
                f"boundary_mask_bits must be {expected} for these sizes, "
                f"got {self.boundary_mask_bits}"
            )

    @property
    def mask(self) -> int:
        return (1 << self.boundary_mask_bits) - 1


@dataclass(frozen=True)
class Chunk:
    data: bytes
    id: Digest

    @classmethod
    def of(cls, data: bytes) -> "Chunk":
        return cls(data, Digest.of(data))


def boundary_candidates(data: bytes, params: ChunkParams) -> np.ndarray:
    """Sorted end offsets ``i + 1`` of every byte ``i`` whose masked hash is zero."""
    n = len(data)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    arr = np.frombuffer(data, dtype=np.uint8)
    bits = min(params.boundary_mask_bits, WINDOW)
    mask = np.uint64(params.mask)
    found = []
    for start in range(0, n, _BLOCK):
        stop = min(n, start + _BLOCK)
        lo = max(0, start - bits + 1)
        g = GEAR[arr[lo:stop]]
        h = np.zeros(len(g), dtype=np.uint64)
        for k in range(min(bits, len(g))):
            h[k:] += g[: len(g) - k] << np.uint64(k)
        hits = np.flatnonzero((h[start - lo:] & mask) == 0)
        found.append(hits + start + 1)
    return np.concatenate(found)


def cut_points(data: bytes, params: ChunkParams = ChunkParams()) -> list[int]:
    """Chunk end offsets; the last one is always ``len(data)``."""
    n = len(data)
    ends = boundary_candidates(data, params)
    cuts = []
    start = 0
    while start < n:
        lo = start + params.min_size
        hi = min(start + params.max_size, n)
        end = hi
        if lo <= hi:
            idx = int(np.searchsorted(ends, lo, side="left"))
            if idx < len(ends) and ends[idx] <= hi:
                end = int(ends[idx])
        cuts.append(end)
        start = end
    return cuts


def chunk_stream(data: bytes, params: ChunkParams = ChunkParams()) -> list[Chunk]:
    data = bytes(data)
    chunks = []
    start = 0
    for end in cut_points(data, params):
        chunks.append(Chunk.of(data[start:end]))
        start = end
    return chunks
