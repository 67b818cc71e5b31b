"""Type-length-value primitives.

Every wire-visible structure is a nested TLV: a 2-byte big-endian type, a
4-byte big-endian length, then ``length`` bytes of value. Integers inside
values are fixed-width big-endian so that encodings are canonical.
"""

from __future__ import annotations

import struct
from typing import Iterator

from .errors import DecodeError

HEADER = struct.Struct(">HI")
U64 = struct.Struct(">Q")

# naming
T_NAME = 0x0001
T_NAME_COMPONENT = 0x0002
T_VERSION = 0x0003
T_SEGMENT = 0x0004
T_CONTENT_OBJECT = 0x0010
T_PAYLOAD_KIND = 0x0011
T_PAYLOAD = 0x0012
T_SECURE_CATALOG = 0x0020

# delta
T_SCRIPT = 0x0030
T_OP = 0x0031
T_DIFF_TYPE = 0x0032
T_SEQ_SCRIPT = 0x0038
T_KEEP_RUN = 0x0039
T_INSERT_IDS = 0x003A
T_DELETE_RUN = 0x003B

# catalog
T_BODY_V1 = 0x0040
T_BODY_V2 = 0x0041
T_BODY_V3 = 0x0042
T_BODY_V4 = 0x0043
T_BODY_V5 = 0x0044
T_PARENTS = 0x0046
T_DIGEST_LIST = 0x0047
T_SEGMENT_COUNT = 0x0048
T_SEGMENT_ENTRY = 0x0049
T_SIGNATURE_BLOCK = 0x0050
T_SCHEME_ID = 0x0051
T_KEY_DIGEST = 0x0052
T_SIGNATURE_VALUE = 0x0053


def tlv(type_code: int, value: bytes) -> bytes:
    return HEADER.pack(type_code, len(value)) + value


def u64(n: int) -> bytes:
    return U64.pack(n)


def read_u64(buf: bytes, what: str = "integer") -> int:
    if len(buf) != 8:
        raise DecodeError(f"{what}: expected 8 bytes, got {len(buf)}")
    return U64.unpack(buf)[0]


def iter_tlv(buf: bytes | memoryview) -> Iterator[tuple[int, memoryview]]:
    """Yield ``(type, value)`` pairs covering ``buf`` exactly."""
    view = memoryview(buf)
    pos = 0
    end = len(view)
    while pos < end:
        if end - pos < HEADER.size:
            raise DecodeError("truncated TLV header")
        t, n = HEADER.unpack_from(view, pos)
        pos += HEADER.size
        if n > end - pos:
            raise DecodeError(f"TLV 0x{t:04x} length {n} overruns buffer")
        yield t, view[pos:pos + n]
        pos += n


class Reader:
    """Sequential reader over the children of one TLV value.

    Decoding is strict: fields must appear in the canonical order and no
    trailing bytes are tolerated.
    """

    def __init__(self, buf: bytes | memoryview):
        self._items = list(iter_tlv(buf))
        self._pos = 0

    def peek(self) -> int | None:
        if self._pos < len(self._items):
            return self._items[self._pos][0]
        return None

    def take(self, type_code: int) -> memoryview:
        if self._pos >= len(self._items):
            raise DecodeError(f"missing TLV 0x{type_code:04x}")
        t, v = self._items[self._pos]
        if t != type_code:
            raise DecodeError(f"expected TLV 0x{type_code:04x}, found 0x{t:04x}")
        self._pos += 1
        return v

    def optional(self, type_code: int) -> memoryview | None:
        if self.peek() == type_code:
            return self.take(type_code)
        return None

    def rest(self, type_code: int) -> list[memoryview]:
        out = []
        while self.peek() == type_code:
            out.append(self.take(type_code))
        return out

    def done(self) -> None:
        if self._pos != len(self._items):
            raise DecodeError(f"unexpected TLV 0x{self._items[self._pos][0]:04x}")


def unwrap(buf: bytes | memoryview, type_code: int) -> memoryview:
    """Return the value of the single top-level TLV in ``buf``."""
    r = Reader(buf)
    v = r.take(type_code)
    r.done()
    return v
