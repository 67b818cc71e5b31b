"""Digest-keyed object stores.

:class:`ObjectStore` keeps canonical encodings on disk under
``objects/<2 hex>/<62 hex>``; the directory scan is the source of truth and
the in-memory index is rebuilt from it on open. :class:`MemoryStore` has the
same interface and is what the simulator uses for throwaway repositories.
"""

from __future__ import annotations

import os
import tempfile
import threading
from pathlib import Path
from typing import Iterable, Iterator

from .catalog import SecureCatalog, canonical_decode
from .errors import DecodeError, IntegrityError, IoError, NotFound
from .naming import ContentObject, Digest

CATALOG = "catalog"


def _kind_of(data: bytes) -> str:
    obj = canonical_decode(data)
    if isinstance(obj, SecureCatalog):
        return CATALOG
    return obj.payload_kind.name.lower()


class BaseStore:
    """Shared logic; subclasses provide raw ``_read`` and ``_write``."""

    def __init__(self) -> None:
        self.index: dict[Digest, tuple[str, int]] = {}
        self._lock = threading.Lock()

    # raw storage hooks
    def _read(self, digest: Digest) -> bytes:
        raise NotImplementedError

    def _write(self, digest: Digest, data: bytes) -> None:
        raise NotImplementedError

    def __contains__(self, digest: object) -> bool:
        return digest in self.index

    def __len__(self) -> int:
        return len(self.index)

    def __iter__(self) -> Iterator[Digest]:
        return iter(list(self.index))

    def put(self, obj: ContentObject | SecureCatalog) -> tuple[Digest, bool]:
        """Store an object; returns its digest and whether it was new."""
        if isinstance(obj, SecureCatalog):
            data, kind = obj.encode(), CATALOG
        else:
            data, kind = obj.encode(max_object_size=len(obj.payload)), obj.payload_kind.name.lower()
        return self._put(Digest.of(data), data, kind)

    def put_encoded(self, data: bytes, digest: Digest | None = None) -> tuple[Digest, bool]:
        actual = Digest.of(data)
        if digest is not None and actual != digest:
            raise IntegrityError(f"bytes hash to {actual.hex()}, not {Digest(digest).hex()}")
        if actual in self.index:
            return actual, False
        try:
            kind = _kind_of(data)
        except DecodeError as exc:
            raise IntegrityError(f"refusing to store undecodable object: {exc}") from exc
        return self._put(actual, data, kind)

    def _put(self, digest: Digest, data: bytes, kind: str) -> tuple[Digest, bool]:
        with self._lock:
            if digest in self.index:
                return digest, False
            self._write(digest, data)
            self.index[digest] = (kind, len(data))
        return digest, True

    def get(self, digest: Digest) -> bytes:
        """Encoded bytes for ``digest``, re-verified against the key."""
        digest = Digest(digest)
        if digest not in self.index:
            raise NotFound(digest.hex())
        data = self._read(digest)
        if Digest.of(data) != digest:
            raise IntegrityError(f"stored bytes for {digest.hex()} do not match their digest")
        return data

    def get_object(self, digest: Digest) -> ContentObject:
        obj = canonical_decode(self.get(digest))
        if not isinstance(obj, ContentObject):
            raise IntegrityError(f"{Digest(digest).hex()} is a catalog, not a content object")
        return obj

    def get_catalog(self, digest: Digest) -> SecureCatalog:
        obj = canonical_decode(self.get(digest))
        if not isinstance(obj, SecureCatalog):
            raise IntegrityError(f"{Digest(digest).hex()} is not a catalog")
        return obj

    def missing(self, digests: Iterable[Digest]) -> list[Digest]:
        return [d for d in digests if d not in self.index]

    def size_of(self, digest: Digest) -> int:
        return self.index[digest][1]

    def catalogs(self) -> list[SecureCatalog]:
        return [self.get_catalog(d) for d, (kind, _) in self.index.items() if kind == CATALOG]

    def total_bytes(self) -> int:
        return sum(n for _, n in self.index.values())


class MemoryStore(BaseStore):
    def __init__(self) -> None:
        super().__init__()
        self._blobs: dict[Digest, bytes] = {}

    def _read(self, digest: Digest) -> bytes:
        return self._blobs[digest]

    def _write(self, digest: Digest, data: bytes) -> None:
        self._blobs[digest] = data


class ObjectStore(BaseStore):
    def __init__(self, root: str | os.PathLike):
        super().__init__()
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        try:
            self.objects_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create store at {self.root}: {exc}") from exc
        self.index = self.scan()

    def path_for(self, digest: Digest) -> Path:
        h = digest.hex()
        return self.objects_dir / h[:2] / h[2:]

    def scan(self) -> dict[Digest, tuple[str, int]]:
        """Rebuild the index from the directory tree.

        Files whose name is not a valid digest are ignored; files that fail to
        decode are indexed as ``corrupt`` so that ``get`` reports them.
        """
        index: dict[Digest, tuple[str, int]] = {}
        for sub in sorted(self.objects_dir.iterdir()):
            if not sub.is_dir() or len(sub.name) != 2:
                continue
            for f in sorted(sub.iterdir()):
                try:
                    digest = Digest.fromhex(sub.name + f.name)
                except ValueError:
                    continue
                data = f.read_bytes()
                try:
                    kind = _kind_of(data)
                except DecodeError:
                    kind = "corrupt"
                index[digest] = (kind, len(data))
        return index

    def _read(self, digest: Digest) -> bytes:
        try:
            return self.path_for(digest).read_bytes()
        except FileNotFoundError:
            raise NotFound(digest.hex()) from None
        except OSError as exc:
            raise IoError(str(exc)) from exc

    def _write(self, digest: Digest, data: bytes) -> None:
        path = self.path_for(digest)
        try:
            path.parent.mkdir(exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except OSError as exc:
            raise IoError(f"writing {path}: {exc}") from exc
