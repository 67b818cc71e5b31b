"""Publishing successive versions of one named object into a store."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .catalog import (
    BinaryDiffSegments,
    ByteOffsetObjects,
    CatalogTree,
    ChunkSeqDiff,
    EncodingParams,
    SecureCatalog,
    SegmentReplace,
    Variant,
    diff_payload_size,
    make_diff_version,
    make_ground_truth,
    reconstruct,
)
from .delta import SeqOpKind
from .naming import ContentObject, Digest, HierarchicalName
from .signing import KeyPair
from .store import BaseStore


@dataclass(frozen=True)
class ConsolidationPolicy:
    """When to write a fresh ground truth instead of another diff.

    A diff is replaced by a ground truth when the new version's resolution
    chain would be longer than ``max_depth`` catalogs, or when the payload
    introduced by the diffs since the last ground truth (this one included)
    would exceed ``max_diff_ratio`` of the new version's size.
    """

    max_depth: int = 8
    max_diff_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class PublishResult:
    version: int
    digest: Digest
    catalog: SecureCatalog
    objects: list[ContentObject]
    new_objects: int
    ground_truth: bool

    @property
    def payload_bytes(self) -> int:
        return diff_payload_size(self.objects)


def trees_in(store: BaseStore) -> dict[HierarchicalName, CatalogTree]:
    by_name: dict[HierarchicalName, list[SecureCatalog]] = {}
    for cat in store.catalogs():
        by_name.setdefault(cat.name.base, []).append(cat)
    return {name: CatalogTree(cats) for name, cats in by_name.items()}


class Publisher:
    """Owns the catalog tree of one name and appends versions to it."""

    def __init__(self, store: BaseStore, name: HierarchicalName, variant: Variant | str,
                 key: KeyPair, params: EncodingParams = EncodingParams(),
                 policy: ConsolidationPolicy = ConsolidationPolicy(),
                 tree: CatalogTree | None = None):
        self.store = store
        self.name = name.base
        self.variant = Variant.parse(variant)
        self.key = key
        self.params = params
        self.policy = policy
        if tree is None:
            tree = trees_in(store).get(self.name, CatalogTree())
        self.tree = tree
        self._last: tuple[int, bytes] | None = None

    def fetch(self, digest: Digest) -> ContentObject:
        return self.store.get_object(digest)

    def _introduced(self, digest: Digest) -> int:
        cat = self.tree[digest]
        if cat.is_ground_truth:
            return 0
        body = cat.body
        if isinstance(body, BinaryDiffSegments):
            ids = body.segments
        elif isinstance(body, ByteOffsetObjects):
            ids = body.objects
        elif isinstance(body, SegmentReplace):
            ids = [d for _, d in body.entries]
        elif isinstance(body, ChunkSeqDiff):
            ids = [d for op in body.ops if op.op is SeqOpKind.INSERT_IDS for d in op.ids]
        else:
            ids = []
        return sum(self.store.size_of(d) for d in ids if d in self.store)

    def _parent_data(self, version: int) -> bytes:
        if self._last is not None and self._last[0] == version:
            return self._last[1]
        return reconstruct(self.tree, version, self.fetch)

    def publish(self, data: bytes, parents: Sequence[int] | None = None) -> PublishResult:
        """Publish ``data`` as the next version.

        By default the new version diffs against the latest one; an explicit
        ``parents`` list (diff base last) overrides that.
        """
        data = bytes(data)
        latest = self.tree.latest_version
        version = 0 if latest is None else latest + 1
        if parents is None:
            parents = [] if latest is None else [latest]
        catalog = objects = None
        ground = not parents or self.variant is Variant.V4
        if not ground:
            base = parents[-1]
            catalog, objects = make_diff_version(
                self.tree, parents, data, self.variant, self.params, self.key, self.fetch,
                version=version,
                parent_data=self._parent_data(base) if self.variant in (Variant.V1, Variant.V3) else None,
            )
            chain = self.tree.chain(base)
            depth = len(chain) + 1
            introduced = sum(self._introduced(d) for d in chain) + diff_payload_size(objects)
            if depth > self.policy.max_depth or introduced > self.policy.max_diff_ratio * len(data):
                ground = True
        if ground and self.variant is Variant.V4 and parents:
            catalog, objects = make_diff_version(
                self.tree, parents, data, self.variant, self.params, self.key, self.fetch,
                version=version,
            )
        elif ground:
            catalog, objects = make_ground_truth(
                self.name, data, self.variant, self.params, self.key, version=version
            )
        new = 0
        for obj in objects:
            new += self.store.put(obj)[1]
        digest, _ = self.store.put(catalog)
        self.tree.add(catalog)
        self._last = (version, data)
        return PublishResult(version, digest, catalog, objects, new, catalog.is_ground_truth)
