"""Secure catalogs: one signed object that vouches for a whole version.

A catalog names a version (``/prefix/v<N>``), lists the digests of the
catalogs it diffs against, and carries one of five bodies:

* V1 ``BinaryDiffSegments`` - segments carrying byte edit-script fragments
  (ground truth: the data segments themselves)
* V2 ``SegmentReplace``     - (segment number, object digest) replacements
* V3 ``ByteOffsetObjects``  - one byte edit op per diff object
  (ground truth: the data segments themselves)
* V4 ``ChunkEnumeration``   - every chunk digest, in order
* V5 ``ChunkSeqDiff``       - a sequence diff against the parent's chunk list

Because payload objects are named by digest, the signature on the catalog
covers everything reachable from it; payloads are never signed individually.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Iterable, Sequence, Union

from . import tlv
from .chunker import ChunkParams, chunk_stream
from .delta import (
    ByteEditOp,
    ByteEditScript,
    SeqEditOp,
    apply_stack,
    byte_diff,
    decode_seq_ops,
    encode_seq_ops,
    seq_apply,
    seq_diff,
)
from .errors import (
    BodyError,
    CycleError,
    DanglingParentError,
    DecodeError,
    ResolutionError,
    UnsupportedSchemeError,
    VerificationError,
)
from .naming import (
    DEFAULT_MAX_OBJECT_SIZE,
    DIGEST_SIZE,
    ContentObject,
    Digest,
    HierarchicalName,
    PayloadKind,
    split_digests,
)
from .signing import SCHEMES, KeyPair, PublicKey, get_scheme

Fetch = Callable[[Digest], ContentObject]


class Variant(enum.IntEnum):
    V1 = 1
    V2 = 2
    V3 = 3
    V4 = 4
    V5 = 5

    @classmethod
    def parse(cls, text: "str | int | Variant") -> "Variant":
        if isinstance(text, int):
            return cls(text)
        t = text.strip().lower()
        if t.startswith("v"):
            t = t[1:]
        try:
            return cls(int(t))
        except ValueError:
            raise ValueError(f"unknown variant {text!r}; expected v1..v5") from None

    @property
    def label(self) -> str:
        return f"v{int(self)}"


# --------------------------------------------------------------------------- #
# bodies
# --------------------------------------------------------------------------- #


def _digest_list(ids: Sequence[Digest]) -> bytes:
    return tlv.tlv(tlv.T_DIGEST_LIST, b"".join(ids))


@dataclass(frozen=True)
class BinaryDiffSegments:
    segments: tuple[Digest, ...] = ()
    variant: ClassVar[Variant] = Variant.V1
    type_code: ClassVar[int] = tlv.T_BODY_V1

    def encode_value(self) -> bytes:
        return _digest_list(self.segments)

    @classmethod
    def decode_value(cls, r: tlv.Reader) -> "BinaryDiffSegments":
        return cls(tuple(split_digests(r.take(tlv.T_DIGEST_LIST))))


@dataclass(frozen=True)
class SegmentReplace:
    entries: tuple[tuple[int, Digest], ...] = ()
    segment_count: int = 0
    variant: ClassVar[Variant] = Variant.V2
    type_code: ClassVar[int] = tlv.T_BODY_V2

    def encode_value(self) -> bytes:
        out = [tlv.tlv(tlv.T_SEGMENT_COUNT, tlv.u64(self.segment_count))]
        out += [tlv.tlv(tlv.T_SEGMENT_ENTRY, tlv.u64(k) + d) for k, d in self.entries]
        return b"".join(out)

    @classmethod
    def decode_value(cls, r: tlv.Reader) -> "SegmentReplace":
        count = tlv.read_u64(r.take(tlv.T_SEGMENT_COUNT), "segment count")
        entries = []
        for v in r.rest(tlv.T_SEGMENT_ENTRY):
            if len(v) != 8 + DIGEST_SIZE:
                raise DecodeError("bad segment entry length")
            entries.append((tlv.read_u64(v[:8]), Digest(v[8:])))
        return cls(tuple(entries), count)


@dataclass(frozen=True)
class ByteOffsetObjects:
    objects: tuple[Digest, ...] = ()
    variant: ClassVar[Variant] = Variant.V3
    type_code: ClassVar[int] = tlv.T_BODY_V3

    def encode_value(self) -> bytes:
        return _digest_list(self.objects)

    @classmethod
    def decode_value(cls, r: tlv.Reader) -> "ByteOffsetObjects":
        return cls(tuple(split_digests(r.take(tlv.T_DIGEST_LIST))))


@dataclass(frozen=True)
class ChunkEnumeration:
    chunk_prefix: HierarchicalName
    ids: tuple[Digest, ...] = ()
    variant: ClassVar[Variant] = Variant.V4
    type_code: ClassVar[int] = tlv.T_BODY_V4

    def encode_value(self) -> bytes:
        return self.chunk_prefix.encode() + _digest_list(self.ids)

    @classmethod
    def decode_value(cls, r: tlv.Reader) -> "ChunkEnumeration":
        prefix = HierarchicalName.decode_value(r.take(tlv.T_NAME))
        return cls(prefix, tuple(split_digests(r.take(tlv.T_DIGEST_LIST))))


@dataclass(frozen=True)
class ChunkSeqDiff:
    ops: tuple[SeqEditOp, ...] = ()
    variant: ClassVar[Variant] = Variant.V5
    type_code: ClassVar[int] = tlv.T_BODY_V5

    def encode_value(self) -> bytes:
        return encode_seq_ops(self.ops)

    @classmethod
    def decode_value(cls, r: tlv.Reader) -> "ChunkSeqDiff":
        return cls(decode_seq_ops(r.take(tlv.T_SEQ_SCRIPT)))


CatalogBody = Union[
    BinaryDiffSegments, SegmentReplace, ByteOffsetObjects, ChunkEnumeration, ChunkSeqDiff
]
_EMPTY_BODIES = {
    Variant.V1: BinaryDiffSegments(),
    Variant.V2: SegmentReplace(),
    Variant.V3: ByteOffsetObjects(),
    Variant.V4: ChunkEnumeration(HierarchicalName()),
    Variant.V5: ChunkSeqDiff(),
}
_BODY_TYPES = {
    cls.type_code: cls
    for cls in (BinaryDiffSegments, SegmentReplace, ByteOffsetObjects,
                ChunkEnumeration, ChunkSeqDiff)
}


# --------------------------------------------------------------------------- #
# signed catalog
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class SignatureBlock:
    scheme_id: int
    public_key_digest: Digest
    signature_bytes: bytes

    def encode(self) -> bytes:
        return tlv.tlv(
            tlv.T_SIGNATURE_BLOCK,
            tlv.tlv(tlv.T_SCHEME_ID, bytes([self.scheme_id]))
            + tlv.tlv(tlv.T_KEY_DIGEST, self.public_key_digest)
            + tlv.tlv(tlv.T_SIGNATURE_VALUE, self.signature_bytes),
        )

    @classmethod
    def decode_value(cls, value: memoryview) -> "SignatureBlock":
        r = tlv.Reader(value)
        scheme = r.take(tlv.T_SCHEME_ID)
        key_digest = r.take(tlv.T_KEY_DIGEST)
        sig = bytes(r.take(tlv.T_SIGNATURE_VALUE))
        r.done()
        if len(scheme) != 1 or len(key_digest) != DIGEST_SIZE:
            raise DecodeError("malformed signature block")
        known = SCHEMES.get(scheme[0])
        if known is not None and len(sig) != known.signature_size:
            raise DecodeError("signature length does not match scheme")
        return cls(scheme[0], Digest(key_digest), sig)


def _unsigned_encoding(name: HierarchicalName, parents: Sequence[Digest],
                       body: CatalogBody) -> bytes:
    return (
        name.encode()
        + tlv.tlv(tlv.T_PARENTS, b"".join(parents))
        + tlv.tlv(body.type_code, body.encode_value())
    )


@dataclass(frozen=True)
class SecureCatalog:
    name: HierarchicalName
    parents: tuple[Digest, ...]
    body: CatalogBody
    signature: SignatureBlock
    _encoded: bytes | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def version(self) -> int:
        return self.name.version

    @property
    def variant(self) -> Variant:
        return self.body.variant

    @property
    def is_ground_truth(self) -> bool:
        return not self.parents

    def signed_bytes(self) -> bytes:
        return tlv.tlv(tlv.T_SECURE_CATALOG,
                       _unsigned_encoding(self.name, self.parents, self.body))

    def encode(self) -> bytes:
        if self._encoded is None:
            value = _unsigned_encoding(self.name, self.parents, self.body) + self.signature.encode()
            object.__setattr__(self, "_encoded", tlv.tlv(tlv.T_SECURE_CATALOG, value))
        return self._encoded

    @property
    def digest(self) -> Digest:
        return Digest.of(self.encode())

    @classmethod
    def decode(cls, buf: bytes | memoryview) -> "SecureCatalog":
        r = tlv.Reader(tlv.unwrap(buf, tlv.T_SECURE_CATALOG))
        name = HierarchicalName.decode_value(r.take(tlv.T_NAME))
        parents = tuple(split_digests(r.take(tlv.T_PARENTS)))
        body_type = r.peek()
        body_cls = _BODY_TYPES.get(body_type)
        if body_cls is None:
            raise DecodeError(f"unknown catalog body type {body_type!r}")
        br = tlv.Reader(r.take(body_type))
        body = body_cls.decode_value(br)
        br.done()
        sig = SignatureBlock.decode_value(r.take(tlv.T_SIGNATURE_BLOCK))
        r.done()
        try:
            check_body(name, parents, body)
        except BodyError as exc:
            raise DecodeError(str(exc)) from exc
        return cls(name, parents, body, sig)


def check_body(name: HierarchicalName, parents: Sequence[Digest], body: CatalogBody) -> None:
    if name.version is None or name.segment is not None:
        raise BodyError(f"catalog name must carry a version and no segment: {name}")
    if len(set(parents)) != len(parents):
        raise BodyError("duplicate parent digest")
    if isinstance(body, SegmentReplace):
        seen = set()
        for k, _ in body.entries:
            if k in seen:
                raise BodyError(f"segment {k} replaced twice")
            if k >= body.segment_count:
                raise BodyError(f"segment {k} beyond declared count {body.segment_count}")
            seen.add(k)
    elif isinstance(body, ChunkEnumeration):
        if parents:
            raise BodyError("a full chunk enumeration is a ground truth and takes no parents")
    elif isinstance(body, ChunkSeqDiff):
        if not parents:
            raise BodyError("a chunk sequence diff needs at least one parent")
    elif not isinstance(body, (BinaryDiffSegments, ByteOffsetObjects)):
        raise BodyError(f"not a catalog body: {type(body).__name__}")


def sign_catalog(name: HierarchicalName, parents: Sequence[Digest], body: CatalogBody,
                 signing_key: KeyPair) -> SecureCatalog:
    parents = tuple(Digest(p) for p in parents)
    check_body(name, parents, body)
    unsigned = tlv.tlv(tlv.T_SECURE_CATALOG, _unsigned_encoding(name, parents, body))
    sig = SignatureBlock(signing_key.scheme_id, signing_key.public_key.digest,
                         signing_key.sign(unsigned))
    return SecureCatalog(name, parents, body, sig)


def verify_catalog(catalog: SecureCatalog, public_key: PublicKey | bytes) -> bool:
    """True iff the signature is valid for ``public_key``.

    Raises :class:`UnsupportedSchemeError` for an unregistered scheme id.
    """
    scheme = get_scheme(catalog.signature.scheme_id)
    key = public_key.key if isinstance(public_key, PublicKey) else bytes(public_key)
    if Digest.of(key) != catalog.signature.public_key_digest:
        return False
    if len(catalog.signature.signature_bytes) != scheme.signature_size:
        return False
    return scheme.verify(key, catalog.signature.signature_bytes, catalog.signed_bytes())


def verify_catalog_bytes(buf: bytes, public_key: PublicKey | bytes) -> bool:
    """Verify an encoded catalog; any decoding problem counts as rejection."""
    try:
        catalog = SecureCatalog.decode(buf)
        if catalog.encode() != bytes(buf):
            return False
        return verify_catalog(catalog, public_key)
    except (DecodeError, UnsupportedSchemeError, ValueError):
        return False


def canonical_encode(obj: ContentObject | SecureCatalog,
                     max_object_size: int = DEFAULT_MAX_OBJECT_SIZE) -> bytes:
    if isinstance(obj, ContentObject):
        return obj.encode(max_object_size)
    if isinstance(obj, SecureCatalog):
        return obj.encode()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_decode(buf: bytes | memoryview) -> ContentObject | SecureCatalog:
    if len(buf) < 2:
        raise DecodeError("buffer too short")
    type_code = int.from_bytes(bytes(buf[:2]), "big")
    if type_code == tlv.T_CONTENT_OBJECT:
        return ContentObject.decode(buf)
    if type_code == tlv.T_SECURE_CATALOG:
        return SecureCatalog.decode(buf)
    raise DecodeError(f"unknown top-level type 0x{type_code:04x}")


# --------------------------------------------------------------------------- #
# catalog tree and resolution
# --------------------------------------------------------------------------- #


class CatalogTree:
    """All catalogs of one named object, keyed by digest and by version.

    Readers may share a tree across threads; :meth:`add` needs exclusive access.
    """

    def __init__(self, catalogs: Iterable[SecureCatalog] = ()):
        self.nodes: dict[Digest, SecureCatalog] = {}
        self.versions: dict[int, Digest] = {}
        for c in sorted(catalogs, key=lambda c: c.version):
            self.add(c)

    def __contains__(self, digest: object) -> bool:
        return digest in self.nodes

    def __getitem__(self, digest: Digest) -> SecureCatalog:
        try:
            return self.nodes[digest]
        except KeyError:
            raise DanglingParentError(f"catalog {Digest(digest).hex()} not in tree") from None

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def name(self) -> HierarchicalName | None:
        if not self.nodes:
            return None
        return next(iter(self.nodes.values())).name.base

    @property
    def latest_version(self) -> int | None:
        return max(self.versions) if self.versions else None

    def add(self, catalog: SecureCatalog) -> Digest:
        digest = catalog.digest
        if digest in self.nodes:
            return digest
        if self.nodes and catalog.name.base != self.name:
            raise ValueError(f"{catalog.name} does not belong to tree {self.name}")
        if catalog.version in self.versions:
            raise ValueError(f"version {catalog.version} already present")
        for p in catalog.parents:
            parent = self.nodes.get(p)
            if parent is not None and parent.version >= catalog.version:
                raise CycleError(
                    f"v{catalog.version} lists parent v{parent.version}; "
                    "versions must strictly increase along parent edges"
                )
        self.nodes[digest] = catalog
        self.versions[catalog.version] = digest
        return digest

    def digest_for(self, version: int | Digest) -> Digest:
        if isinstance(version, bytes):
            if version not in self.nodes:
                raise DanglingParentError(f"catalog {Digest(version).hex()} not in tree")
            return Digest(version)
        try:
            return self.versions[version]
        except KeyError:
            raise ResolutionError(f"version {version} not in tree") from None

    def post_order(self, version: int | Digest) -> list[Digest]:
        """Ancestors before descendants, parents visited left to right."""
        root = self.digest_for(version)
        order: list[Digest] = []
        state: dict[Digest, int] = {}
        stack: list[tuple[Digest, bool]] = [(root, False)]
        while stack:
            d, expanded = stack.pop()
            if expanded:
                state[d] = 2
                order.append(d)
                continue
            s = state.get(d)
            if s == 2:
                continue
            if s == 1:
                raise CycleError(f"cycle through catalog {d.hex()}")
            cat = self[d]
            state[d] = 1
            stack.append((d, True))
            for p in reversed(cat.parents):
                parent = self[p]
                if parent.version >= cat.version:
                    raise CycleError(f"v{cat.version} lists non-earlier parent v{parent.version}")
                if state.get(p) == 1:
                    raise CycleError(f"cycle through catalog {p.hex()}")
                if state.get(p) != 2:
                    stack.append((p, False))
        return order

    def chain(self, version: int | Digest) -> list[Digest]:
        """Ground truth first, following the last listed parent at each step."""
        out = []
        d = self.digest_for(version)
        while True:
            out.append(d)
            cat = self[d]
            if not cat.parents:
                break
            d = cat.parents[-1]
            if self[d].version >= cat.version:
                raise CycleError(f"v{cat.version} lists non-earlier parent")
        out.reverse()
        return out

    def depth(self, version: int | Digest) -> int:
        return len(self.chain(version))


def _family(body: CatalogBody) -> str:
    if isinstance(body, (ChunkEnumeration, ChunkSeqDiff)):
        return "chunks"
    if isinstance(body, SegmentReplace):
        return "segments"
    return "bytes"


def resolve_chunks(tree: CatalogTree, version: int | Digest) -> list[Digest]:
    """Ordered chunk-object digests of a V4/V5 version."""
    return _resolve_chunk_lists(tree, version)[tree.digest_for(version)]


def _resolve_chunk_lists(tree: CatalogTree, version: int | Digest) -> dict[Digest, list[Digest]]:
    memo: dict[Digest, list[Digest]] = {}
    for d in tree.post_order(version):
        body = tree[d].body
        if isinstance(body, ChunkEnumeration):
            memo[d] = list(body.ids)
        elif isinstance(body, ChunkSeqDiff):
            memo[d] = seq_apply(memo[tree[d].parents[-1]], body.ops)
        else:
            raise ResolutionError(f"v{tree[d].version} is not a chunk catalog")
    return memo


def _merged_segment_map(tree: CatalogTree, roots: Sequence[int | Digest]) -> dict[int, Digest]:
    merged: dict[int, Digest] = {}
    seen: set[Digest] = set()
    for root in roots:
        for d in tree.post_order(root):
            if d in seen:
                continue
            seen.add(d)
            body = tree[d].body
            if not isinstance(body, SegmentReplace):
                raise ResolutionError(f"v{tree[d].version} is not a segment catalog")
            for k, obj in body.entries:
                merged[k] = obj
    return merged


def resolve_segments(tree: CatalogTree, version: int | Digest) -> dict[int, Digest]:
    """Segment number to object digest for a V2 version (right-most wins)."""
    merged = _merged_segment_map(tree, [version])
    count = tree[tree.digest_for(version)].body.segment_count
    missing = [k for k in range(count) if k not in merged]
    if missing:
        raise ResolutionError(f"segments {missing[:5]} never defined")
    return {k: merged[k] for k in range(count)}


@dataclass
class BytePlan:
    """Base data segments plus the script stack that turns them into a version."""

    base: tuple[Digest, ...]
    scripts: list[ByteEditScript]
    catalogs: list[Digest]

    def __len__(self) -> int:
        return len(self.scripts)


def _diff_objects(body: CatalogBody) -> tuple[Digest, ...]:
    return body.segments if isinstance(body, BinaryDiffSegments) else body.objects


def resolve_byte_plan(tree: CatalogTree, version: int | Digest, fetch: Fetch) -> BytePlan:
    tree.post_order(version)  # dangling / cycle checks over every ancestor
    chain = tree.chain(version)
    root = tree[chain[0]].body
    if not isinstance(root, (BinaryDiffSegments, ByteOffsetObjects)):
        raise ResolutionError(f"v{tree[chain[0]].version} is not a byte catalog")
    scripts = [ByteEditScript()]
    for d in chain[1:]:
        scripts.append(_load_script(tree[d].body, fetch))
    return BytePlan(_diff_objects(root), scripts, chain)


def _load_script(body: CatalogBody, fetch: Fetch) -> ByteEditScript:
    ops: list[ByteEditOp] = []
    if isinstance(body, BinaryDiffSegments):
        for d in body.segments:
            obj = _expect(fetch(d), PayloadKind.DIFF_SEGMENT, d)
            ops.extend(ByteEditScript.decode(obj.payload).ops)
    elif isinstance(body, ByteOffsetObjects):
        for d in body.objects:
            obj = _expect(fetch(d), PayloadKind.DIFF_SEGMENT, d)
            ops.append(ByteEditOp.decode(obj.payload))
    else:
        raise ResolutionError(f"{type(body).__name__} cannot follow a byte ground truth")
    return ByteEditScript(tuple(ops))


def _expect(obj: ContentObject, kind: PayloadKind, digest: Digest) -> ContentObject:
    if obj.payload_kind != kind:
        raise VerificationError(
            f"object {digest.hex()} is {obj.payload_kind.name}, expected {kind.name}"
        )
    if kind is PayloadKind.CHUNK:
        comps = obj.name.components
        if not comps or comps[-1] != Digest.of(obj.payload):
            raise VerificationError(f"chunk {digest.hex()} is not named by its hash")
    return obj


def required_objects(tree: CatalogTree, version: int | Digest) -> list[Digest]:
    """Payload objects needed to reconstruct ``version``, in first-use order.

    Earlier-listed parents of multi-parent catalogs are included so that
    their content is cached alongside the diff base.
    """
    root = tree.digest_for(version)
    family = _family(tree[root].body)
    out: dict[Digest, None] = {}
    chunk_lists = _resolve_chunk_lists(tree, root) if family == "chunks" else {}

    def own(d: Digest) -> Iterable[Digest]:
        if family == "chunks":
            return chunk_lists[d]
        if family == "segments":
            return resolve_segments(tree, d).values()
        result: list[Digest] = []
        for c in tree.chain(d):
            result.extend(_diff_objects(tree[c].body))
        return result

    out.update(dict.fromkeys(own(root)))
    for d in tree.post_order(root):
        for p in tree[d].parents[:-1]:
            out.update(dict.fromkeys(own(p)))
    return list(out)


def verify_path(tree: CatalogTree, version: int | Digest,
                trusted: Sequence[PublicKey]) -> int:
    """Verify every catalog on the resolution path; returns how many."""
    by_digest = {k.digest: k for k in trusted}
    path = tree.post_order(version)
    for d in path:
        cat = tree[d]
        key = by_digest.get(cat.signature.public_key_digest)
        if key is None or not verify_catalog(cat, key):
            raise VerificationError(f"signature check failed for {cat.name}")
    return len(path)


def reconstruct(tree: CatalogTree, version: int | Digest, fetch: Fetch) -> bytes:
    """Rebuild a version's bytes from payload objects supplied by ``fetch``.

    ``fetch`` is expected to return objects whose digest matches the request
    (stores re-hash on read); this function checks payload kinds and chunk
    names on top of that.
    """
    root = tree.digest_for(version)
    body = tree[root].body
    family = _family(body)
    if family == "chunks":
        cache: dict[Digest, bytes] = {}
        parts = []
        for d in resolve_chunks(tree, root):
            if d not in cache:
                cache[d] = _expect(fetch(d), PayloadKind.CHUNK, d).payload
            parts.append(cache[d])
        return b"".join(parts)
    if family == "segments":
        return b"".join(
            _expect(fetch(d), PayloadKind.DATA_SEGMENT, d).payload
            for d in resolve_segments(tree, root).values()
        )
    plan = resolve_byte_plan(tree, root, fetch)
    base = [_expect(fetch(d), PayloadKind.DATA_SEGMENT, d).payload for d in plan.base]
    return apply_stack(base, plan.scripts)


# --------------------------------------------------------------------------- #
# encoding versions
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class EncodingParams:
    chunk: ChunkParams = ChunkParams()
    segment_size: int = 8192
    max_object_size: int = DEFAULT_MAX_OBJECT_SIZE
    chunk_prefix: HierarchicalName | None = None

    def __post_init__(self) -> None:
        if self.segment_size < 128:
            raise ValueError("segment_size must be at least 128 bytes")
        if self.segment_size > self.max_object_size:
            raise ValueError("segment_size exceeds max_object_size")
        if self.chunk.max_size > self.max_object_size:
            raise ValueError("chunk max_size exceeds max_object_size")

    def prefix_for(self, name: HierarchicalName) -> HierarchicalName:
        return self.chunk_prefix if self.chunk_prefix is not None else name.base


def _segments(data: bytes, size: int) -> list[bytes]:
    return [data[i:i + size] for i in range(0, len(data), size)]


def _chunk_objects(data: bytes, prefix: HierarchicalName,
                   params: ChunkParams) -> list[ContentObject]:
    return [
        ContentObject(prefix.child(c.id), c.data, PayloadKind.CHUNK)
        for c in chunk_stream(data, params)
    ]


def _dedup(objects: Iterable[ContentObject], skip: set[Digest] = frozenset()) -> list[ContentObject]:
    out: dict[Digest, ContentObject] = {}
    for obj in objects:
        d = obj.digest
        if d not in skip and d not in out:
            out[d] = obj
    return list(out.values())


def make_ground_truth(name: HierarchicalName, data: bytes, variant: Variant | str,
                      params: EncodingParams, key: KeyPair,
                      version: int = 0) -> tuple[SecureCatalog, list[ContentObject]]:
    variant = Variant.parse(variant)
    vname = name.base.with_version(version)
    if variant in (Variant.V4, Variant.V5):
        chunks = _chunk_objects(data, params.prefix_for(name), params.chunk)
        body = ChunkEnumeration(params.prefix_for(name), tuple(c.digest for c in chunks))
        return sign_catalog(vname, (), body, key), _dedup(chunks)
    segs = [
        ContentObject(vname.with_segment(k), seg, PayloadKind.DATA_SEGMENT)
        for k, seg in enumerate(_segments(data, params.segment_size))
    ]
    digests = tuple(s.digest for s in segs)
    if variant is Variant.V2:
        body = SegmentReplace(tuple(enumerate(digests)), len(segs))
    elif variant is Variant.V1:
        body = BinaryDiffSegments(digests)
    else:
        body = ByteOffsetObjects(digests)
    return sign_catalog(vname, (), body, key), segs


def _pack_fragments(script: ByteEditScript, budget: int) -> list[bytes]:
    header = len(ByteEditScript().encode())
    fragments, current, size = [], [], header
    for op in script.ops:
        enc = len(op.encode())
        if current and size + enc > budget:
            fragments.append(ByteEditScript(tuple(current)).encode())
            current, size = [], header
        current.append(op)
        size += enc
    if current:
        fragments.append(ByteEditScript(tuple(current)).encode())
    return fragments


def make_diff_version(tree: CatalogTree, parent_versions: Sequence[int | Digest],
                      new_data: bytes, variant: Variant | str, params: EncodingParams,
                      key: KeyPair, fetch: Fetch, *, version: int | None = None,
                      parent_data: bytes | None = None,
                      ) -> tuple[SecureCatalog, list[ContentObject]]:
    """Encode ``new_data`` as a diff against catalogs already in ``tree``.

    Ops apply to the last listed parent. ``parent_data`` may supply that
    parent's plaintext to skip reconstructing it (V1/V3 only).
    """
    variant = Variant.parse(variant)
    if not parent_versions:
        raise BodyError("a diff version needs at least one parent")
    parents = [tree.digest_for(p) for p in parent_versions]
    for p in parents:
        tree.post_order(p)
    name = tree[parents[-1]].name.base
    wanted = _family(_EMPTY_BODIES[variant])
    for p in parents:
        if _family(tree[p].body) != wanted:
            raise BodyError(f"a {variant.label} diff cannot build on v{tree[p].version} "
                            f"({tree[p].variant.label})")
    if version is None:
        version = tree.latest_version + 1
    vname = name.with_version(version)

    if variant in (Variant.V4, Variant.V5):
        lists = {}
        for p in parents:
            lists.update(_resolve_chunk_lists(tree, p))
        known = set()
        for p in parents:
            known.update(lists[p])
        prefix = params.prefix_for(name)
        chunks = _chunk_objects(new_data, prefix, params.chunk)
        ids = [c.digest for c in chunks]
        if variant is Variant.V4:
            body = ChunkEnumeration(prefix, tuple(ids))
            catalog = sign_catalog(vname, (), body, key)
        else:
            body = ChunkSeqDiff(tuple(seq_diff(lists[parents[-1]], ids)))
            catalog = sign_catalog(vname, parents, body, key)
        return catalog, _dedup(chunks, known)

    if variant is Variant.V2:
        merged = _merged_segment_map(tree, parents)
        segs = _segments(new_data, params.segment_size)
        entries, objects = [], []
        for k, seg in enumerate(segs):
            old = merged.get(k)
            if old is not None and _expect(fetch(old), PayloadKind.DATA_SEGMENT, old).payload == seg:
                continue
            obj = ContentObject(vname.with_segment(k), seg, PayloadKind.DATA_SEGMENT)
            entries.append((k, obj.digest))
            objects.append(obj)
        body = SegmentReplace(tuple(entries), len(segs))
        return sign_catalog(vname, parents, body, key), objects

    if parent_data is None:
        parent_data = reconstruct(tree, parents[-1], fetch)
    script = byte_diff(parent_data, new_data).split(params.segment_size - 64)
    if variant is Variant.V1:
        payloads = _pack_fragments(script, params.segment_size)
        objects = [
            ContentObject(vname.with_segment(k), p, PayloadKind.DIFF_SEGMENT)
            for k, p in enumerate(payloads)
        ]
        body = BinaryDiffSegments(tuple(o.digest for o in objects))
    else:
        objects = [
            ContentObject(vname.with_segment(k), op.encode(), PayloadKind.DIFF_SEGMENT)
            for k, op in enumerate(script.ops)
        ]
        body = ByteOffsetObjects(tuple(o.digest for o in objects))
    return sign_catalog(vname, parents, body, key), objects


def diff_payload_size(objects: Sequence[ContentObject]) -> int:
    """Encoded bytes of a list of payload objects."""
    return sum(len(o.encode(max_object_size=len(o.payload))) for o in objects)
