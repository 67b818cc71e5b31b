"""Hierarchical names, SHA-256 digests and content objects.

A content object is the transfer atom: a name, a payload kind and a payload.
Its identity is the SHA-256 of its canonical TLV encoding, so any holder of
the digest can check a received object without trusting the sender.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import re
from dataclasses import dataclass, field
from urllib.parse import quote, unquote_to_bytes

from . import tlv
from .errors import DecodeError, NameParseError, SizeError

DIGEST_SIZE = 32
DEFAULT_MAX_OBJECT_SIZE = 64 * 1024

_MARKER = re.compile(r"^([vs])(\d+)$")
_SAFE = "-._~!$&'()*+,;=:@"


class Digest(bytes):
    """A 32-byte SHA-256 value; compares as bytes, renders as lowercase hex."""

    def __new__(cls, value: bytes | bytearray | memoryview) -> "Digest":
        value = bytes(value)
        if len(value) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def of(cls, data: bytes | memoryview) -> "Digest":
        return cls(hashlib.sha256(data).digest())

    @classmethod
    def fromhex(cls, text: str) -> "Digest":  # type: ignore[override]
        return cls(bytes.fromhex(text))

    def __str__(self) -> str:
        return self.hex()

    def __repr__(self) -> str:
        return f"Digest({self.hex()[:16]}…)"


def split_digests(buf: bytes | memoryview) -> list[Digest]:
    if len(buf) % DIGEST_SIZE:
        raise DecodeError("digest list length is not a multiple of 32")
    buf = bytes(buf)
    return [Digest(buf[i:i + DIGEST_SIZE]) for i in range(0, len(buf), DIGEST_SIZE)]


@functools.total_ordering
@dataclass(frozen=True, eq=True)
class HierarchicalName:
    """A CCNx-style name such as ``/parc/csl/papers.doc/v0/s0``.

    ``components`` holds the plain components; ``version`` and ``segment`` are
    the optional ``v<N>`` and ``s<N>`` markers, always rendered last.
    """

    components: tuple[bytes, ...] = ()
    version: int | None = None
    segment: int | None = None

    def __post_init__(self) -> None:
        comps = tuple(bytes(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if any(len(c) == 0 for c in comps):
            raise NameParseError("name components must be non-empty")
        for marker in (self.version, self.segment):
            if marker is not None and (not isinstance(marker, int) or marker < 0):
                raise NameParseError(f"bad version/segment marker {marker!r}")
        if self.segment is not None and self.version is None:
            raise NameParseError("segment component requires a version component")

    def _key(self) -> tuple:
        return (
            self.components,
            -1 if self.version is None else self.version,
            -1 if self.segment is None else self.segment,
        )

    def __lt__(self, other: "HierarchicalName") -> bool:
        if not isinstance(other, HierarchicalName):
            return NotImplemented
        return self._key() < other._key()

    @property
    def base(self) -> "HierarchicalName":
        return HierarchicalName(self.components)

    def child(self, component: bytes | str) -> "HierarchicalName":
        if self.version is not None:
            raise NameParseError("cannot append a component after a version marker")
        if isinstance(component, str):
            component = component.encode()
        return HierarchicalName(self.components + (component,))

    def with_version(self, version: int) -> "HierarchicalName":
        return HierarchicalName(self.components, version)

    def with_segment(self, segment: int) -> "HierarchicalName":
        return HierarchicalName(self.components, self.version, segment)

    def __str__(self) -> str:
        parts = [_render_component(c) for c in self.components]
        if self.version is not None:
            parts.append(f"v{self.version}")
        if self.segment is not None:
            parts.append(f"s{self.segment}")
        return "/" + "/".join(parts)

    def encode(self) -> bytes:
        out = [tlv.tlv(tlv.T_NAME_COMPONENT, c) for c in self.components]
        if self.version is not None:
            out.append(tlv.tlv(tlv.T_VERSION, tlv.u64(self.version)))
        if self.segment is not None:
            out.append(tlv.tlv(tlv.T_SEGMENT, tlv.u64(self.segment)))
        return tlv.tlv(tlv.T_NAME, b"".join(out))

    @classmethod
    def decode_value(cls, value: bytes | memoryview) -> "HierarchicalName":
        r = tlv.Reader(value)
        comps = [bytes(v) for v in r.rest(tlv.T_NAME_COMPONENT)]
        version = r.optional(tlv.T_VERSION)
        segment = r.optional(tlv.T_SEGMENT)
        r.done()
        try:
            return cls(
                tuple(comps),
                None if version is None else tlv.read_u64(version, "version"),
                None if segment is None else tlv.read_u64(segment, "segment"),
            )
        except NameParseError as exc:
            raise DecodeError(str(exc)) from exc


def _render_component(c: bytes) -> str:
    text = quote(c, safe=_SAFE)
    if _MARKER.match(text):
        # keep plain components that look like markers distinguishable
        text = f"%{ord(text[0]):02X}{text[1:]}"
    return text


def parse_name(text: str) -> HierarchicalName:
    """Parse ``/a/b/v<N>/s<N>``; markers are only recognised at the tail."""
    if not text.startswith("/"):
        raise NameParseError(f"name must start with '/': {text!r}")
    if text == "/":
        return HierarchicalName()
    parts = text[1:].split("/")
    comps: list[bytes] = []
    version = segment = None
    for part in parts:
        if not part:
            raise NameParseError(f"empty component in {text!r}")
        m = _MARKER.match(part)
        if m:
            kind, digits = m.groups()
            if len(digits) > 1 and digits[0] == "0":
                raise NameParseError(f"malformed integer in {part!r}")
            if kind == "v":
                if version is not None or segment is not None:
                    raise NameParseError(f"misplaced version marker in {text!r}")
                version = int(digits)
            else:
                if version is None:
                    raise NameParseError(f"segment before version in {text!r}")
                if segment is not None:
                    raise NameParseError(f"duplicate segment marker in {text!r}")
                segment = int(digits)
            continue
        if version is not None:
            raise NameParseError(f"component after version marker in {text!r}")
        comps.append(unquote_to_bytes(part))
    return HierarchicalName(tuple(comps), version, segment)


class PayloadKind(enum.IntEnum):
    DATA_SEGMENT = 1
    DIFF_SEGMENT = 2
    CHUNK = 3
    CATALOG = 4


@dataclass(frozen=True)
class ContentObject:
    name: HierarchicalName
    payload: bytes
    payload_kind: PayloadKind = PayloadKind.DATA_SEGMENT
    _encoded: bytes | None = field(default=None, init=False, repr=False, compare=False)

    def encode(self, max_object_size: int = DEFAULT_MAX_OBJECT_SIZE) -> bytes:
        if len(self.payload) > max_object_size:
            raise SizeError(
                f"payload of {len(self.payload)} bytes exceeds {max_object_size}"
            )
        if self._encoded is None:
            body = (
                self.name.encode()
                + tlv.tlv(tlv.T_PAYLOAD_KIND, bytes([self.payload_kind]))
                + tlv.tlv(tlv.T_PAYLOAD, self.payload)
            )
            object.__setattr__(self, "_encoded", tlv.tlv(tlv.T_CONTENT_OBJECT, body))
        return self._encoded

    @property
    def digest(self) -> Digest:
        return object_digest(self)

    @classmethod
    def decode(cls, buf: bytes | memoryview) -> "ContentObject":
        r = tlv.Reader(tlv.unwrap(buf, tlv.T_CONTENT_OBJECT))
        name = HierarchicalName.decode_value(r.take(tlv.T_NAME))
        kind = r.take(tlv.T_PAYLOAD_KIND)
        payload = bytes(r.take(tlv.T_PAYLOAD))
        r.done()
        if len(kind) != 1:
            raise DecodeError("payload kind must be one byte")
        try:
            payload_kind = PayloadKind(kind[0])
        except ValueError as exc:
            raise DecodeError(f"unknown payload kind {kind[0]}") from exc
        return cls(name, payload, payload_kind)


def object_digest(obj: ContentObject) -> Digest:
    return Digest.of(obj.encode(max_object_size=len(obj.payload)))
