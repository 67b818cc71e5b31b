"""Diff-based content networking: versioned objects as signed catalogs over
hash-named content objects."""

from .catalog import (
    CatalogTree,
    EncodingParams,
    SecureCatalog,
    Variant,
    canonical_decode,
    canonical_encode,
    make_diff_version,
    make_ground_truth,
    reconstruct,
    resolve_byte_plan,
    resolve_chunks,
    resolve_segments,
    sign_catalog,
    verify_catalog,
)
from .chunker import Chunk, ChunkParams, chunk_stream
from .delta import byte_apply, byte_diff, seq_apply, seq_diff
from .naming import ContentObject, Digest, HierarchicalName, PayloadKind, object_digest, parse_name
from .publish import ConsolidationPolicy, Publisher
from .signing import KeyPair, PublicKey
from .sim import SimScenario, TransferStats, fetch_version, run_scenario
from .store import MemoryStore, ObjectStore

__version__ = "0.1.0"
