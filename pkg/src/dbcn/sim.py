"""Publisher/consumer transfer simulation.

The network is a set of digest-keyed fetches from a remote store into a
local one. A fetch moves the catalogs on the resolution path plus whichever
payload objects the local store lacks, then reconstructs the version from the
local store alone. Byte counts are exact sizes of canonical encodings.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .catalog import (
    CatalogTree,
    EncodingParams,
    Variant,
    reconstruct,
    required_objects,
    verify_path,
)
from .chunker import ChunkParams
from .errors import RepoIncompleteError, ScenarioError, VerificationError
from .naming import HierarchicalName, parse_name
from .publish import ConsolidationPolicy, Publisher
from .signing import KeyPair, PublicKey
from .store import BaseStore, MemoryStore

CSV_FIELDS = ("version", "variant", "bytes_on_wire", "full_size", "savings_ratio")


@dataclass
class TransferStats:
    version: int
    variant: str
    objects_requested: int
    objects_transferred: int
    cache_hits: int
    bytes_on_wire: int
    full_size: int
    savings_ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


def savings(bytes_on_wire: int, full_size: int) -> float:
    # an empty version has nothing to save
    if full_size == 0:
        return 0.0
    return round(1.0 - bytes_on_wire / full_size, 6)


def fetch_version(remote: BaseStore, local: BaseStore, tree: CatalogTree,
                  version: int, *, trusted: Sequence[PublicKey] | None = None,
                  variant: Variant | str | None = None,
                  expected: bytes | None = None) -> TransferStats:
    """Bring ``version`` into ``local`` and account for the bytes moved.

    ``tree`` is the publisher's catalog tree; only catalogs on the version's
    resolution path are transferred. With ``trusted`` keys every catalog on
    the path is verified; with ``expected`` plaintext the reconstruction is
    compared and a mismatch raises :class:`VerificationError`.
    """
    root = tree.digest_for(version)
    requested = transferred = hits = wire = 0

    def pull(digest) -> None:
        nonlocal requested, transferred, hits, wire
        requested += 1
        if digest in local:
            hits += 1
            return
        if digest not in remote:
            raise RepoIncompleteError(f"remote store lacks {digest.hex()}")
        data = remote.get(digest)
        local.put_encoded(data, digest)
        transferred += 1
        wire += len(data)

    path = tree.post_order(root)
    for d in path:
        pull(d)
    local_tree = CatalogTree(local.get_catalog(d) for d in path)
    if trusted is not None:
        verify_path(local_tree, root, trusted)
    for d in required_objects(local_tree, root):
        pull(d)
    data = reconstruct(local_tree, root, local.get_object)
    if expected is not None and data != expected:
        raise VerificationError(f"version {version} reconstructed incorrectly")

    if variant is None:
        variant = local_tree[root].variant
    return TransferStats(
        version=local_tree[root].version,
        variant=Variant.parse(variant).label,
        objects_requested=requested,
        objects_transferred=transferred,
        cache_hits=hits,
        bytes_on_wire=wire,
        full_size=len(data),
        savings_ratio=savings(wire, len(data)),
    )


# --------------------------------------------------------------------------- #
# scenarios
# --------------------------------------------------------------------------- #

EDIT_OPS = ("create", "insert", "delete", "replace", "noop")


@dataclass(frozen=True)
class Edit:
    version: int
    op: str
    offset: int = 0
    length: int = 0
    data_seed: int | None = None

    def __post_init__(self) -> None:
        if self.op not in EDIT_OPS:
            raise ScenarioError(f"unknown edit op {self.op!r}; expected one of {EDIT_OPS}")
        if self.version < 0 or self.offset < 0 or self.length < 0:
            raise ScenarioError(f"negative field in {self}")


def _random_bytes(seed: object, n: int) -> bytes:
    return random.Random(seed).randbytes(n)


def apply_edit(data: bytes, edit: Edit, default_seed: object) -> bytes:
    seed = default_seed if edit.data_seed is None else edit.data_seed
    if edit.op == "create":
        return _random_bytes(seed, edit.length)
    if edit.op == "noop":
        return data
    if edit.offset > len(data):
        raise ScenarioError(f"offset {edit.offset} beyond {len(data)}-byte version")
    if edit.op == "insert":
        return data[:edit.offset] + _random_bytes(seed, edit.length) + data[edit.offset:]
    end = edit.offset + edit.length
    if end > len(data):
        raise ScenarioError(f"{edit.op} [{edit.offset}, {end}) beyond {len(data)} bytes")
    if edit.op == "delete":
        return data[:edit.offset] + data[end:]
    return data[:edit.offset] + _random_bytes(seed, edit.length) + data[end:]


@dataclass
class SimScenario:
    name: str = "demo"
    seed: int = 0
    variant: Variant = Variant.V5
    edits: list[Edit] = field(default_factory=list)
    params: EncodingParams = EncodingParams()
    policy: ConsolidationPolicy = ConsolidationPolicy()
    object_name: HierarchicalName = parse_name("/dbcn/sim/object")
    snapshots: list[bytes] | None = None

    @classmethod
    def from_dict(cls, doc: dict, **overrides) -> "SimScenario":
        if not isinstance(doc, dict):
            raise ScenarioError("scenario must be a JSON object")
        try:
            edits = [Edit(**e) for e in doc.get("edits", [])]
            kwargs = dict(
                name=str(doc.get("name", "scenario")),
                seed=int(doc.get("seed", 0)),
                variant=Variant.parse(doc.get("variant", "v5")),
                edits=edits,
            )
            if "object_name" in doc:
                kwargs["object_name"] = parse_name(doc["object_name"])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad scenario: {exc}") from exc
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        scenario = cls(**kwargs)
        scenario.check()
        return scenario

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "SimScenario":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
        return cls.from_dict(doc, **overrides)

    @classmethod
    def from_snapshots(cls, directory: str | Path, **kwargs) -> "SimScenario":
        """Real-file mode: every regular file in ``directory``, by name, is a version."""
        files = sorted(p for p in Path(directory).iterdir() if p.is_file())
        return cls(snapshots=[p.read_bytes() for p in files], **kwargs)

    def check(self) -> None:
        if self.snapshots is not None or not self.edits:
            return
        present = {e.version for e in self.edits}
        if present != set(range(max(present) + 1)):
            raise ScenarioError(f"edit versions must be dense from 0, got {sorted(present)}")

    def versions(self) -> list[bytes]:
        """Plaintext of every version, in order."""
        if self.snapshots is not None:
            return list(self.snapshots)
        self.check()
        if not self.edits:
            return []
        by_version: dict[int, list[Edit]] = {}
        for e in self.edits:
            by_version.setdefault(e.version, []).append(e)
        out, data = [], b""
        for v in range(max(by_version) + 1):
            for i, e in enumerate(by_version[v]):
                data = apply_edit(data, e, f"{self.seed}:{v}:{i}")
            out.append(data)
        return out


def random_edit_trace(seed: int, size: int, n_versions: int, *,
                      ops: Sequence[str] = ("insert", "delete", "replace"),
                      max_edits: int = 3, max_len: int = 4096) -> list[Edit]:
    """Version 0 of ``size`` random bytes, then random point edits per version."""
    rng = random.Random(seed)
    edits = [Edit(0, "create", 0, size, data_seed=rng.getrandbits(32))]
    length = size
    for v in range(1, n_versions):
        count = rng.randint(0, max_edits)
        if count == 0:
            edits.append(Edit(v, "noop"))
        for _ in range(count):
            op = rng.choice(list(ops))
            if op in ("delete", "replace") and length == 0:
                op = "insert"
            n = rng.randint(1, max_len)
            if op == "insert":
                off = rng.randint(0, length)
                length += n
            else:
                off = rng.randint(0, length - 1)
                n = min(n, length - off)
                if op == "delete":
                    length -= n
            edits.append(Edit(v, op, off, n, data_seed=rng.getrandbits(32)))
    return edits


@dataclass
class ScenarioResult:
    stats: list[TransferStats]
    report: dict

    def jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.stats)


def run_scenario(scenario: SimScenario) -> ScenarioResult:
    """Publish every version into a fresh remote and fetch each in turn.

    The consumer's cache persists across versions, so each fetch after the
    first only moves what changed. All randomness, including the signing
    key, is derived from the scenario seed.
    """
    key = KeyPair.generate(seed=f"dbcn-sim:{scenario.seed}".encode())
    remote, local = MemoryStore(), MemoryStore()
    pub = Publisher(remote, scenario.object_name, scenario.variant, key,
                    scenario.params, scenario.policy)
    stats = []
    ground_truths = []
    for v, data in enumerate(scenario.versions()):
        result = pub.publish(data)
        if result.ground_truth:
            ground_truths.append(v)
        stats.append(fetch_version(remote, local, pub.tree, v, trusted=[key.public_key],
                                   variant=scenario.variant, expected=data))
    catalog_bytes = sum(n for kind, n in remote.index.values() if kind == "catalog")
    wire = sum(s.bytes_on_wire for s in stats)
    full = sum(s.full_size for s in stats)
    report = {
        "name": scenario.name,
        "variant": scenario.variant.label,
        "seed": scenario.seed,
        "versions": len(stats),
        "ground_truths": ground_truths,
        "bytes_on_wire_total": wire,
        "full_size_total": full,
        "savings_ratio_total": savings(wire, full),
        "catalog_bytes_published": catalog_bytes,
        "payload_bytes_published": remote.total_bytes() - catalog_bytes,
    }
    return ScenarioResult(stats, report)


def write_jsonl(stats: Iterable[TransferStats], path: str | Path) -> None:
    Path(path).write_text("".join(s.to_json() + "\n" for s in stats))


def read_jsonl(path: str | Path) -> list[TransferStats]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(TransferStats(**json.loads(line)))
    return out


def write_csv(stats: Iterable[TransferStats], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for s in stats:
            w.writerow([getattr(s, f) for f in CSV_FIELDS])


def scenario_params(min_size: int | None = None, target_size: int | None = None,
                    max_size: int | None = None, segment_size: int | None = None,
                    chunk_prefix: str | None = None) -> EncodingParams:
    base = ChunkParams()
    chunk = ChunkParams(min_size or base.min_size, target_size or base.target_size,
                        max_size or base.max_size)
    return EncodingParams(
        chunk=chunk,
        segment_size=segment_size or EncodingParams.segment_size,
        chunk_prefix=parse_name(chunk_prefix) if chunk_prefix else None,
    )
