import hashlib
import math
import random
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from dbcn.chunker import GEAR, GEAR_SHA256, ChunkParams, chunk_stream, cut_points


def reference_cuts(data: bytes, params: ChunkParams) -> list[int]:
    """Byte-at-a-time gear hash, written straight from the definition."""
    gear = [int(x) for x in GEAR]
    mask = params.mask
    cuts, start, h = [], 0, 0
    for i, byte in enumerate(data):
        h = ((h << 1) + gear[byte]) & 0xFFFFFFFFFFFFFFFF
        length = i + 1 - start
        if (length >= params.min_size and h & mask == 0) or length == params.max_size:
            cuts.append(i + 1)
            start = i + 1
    if start < len(data):
        cuts.append(len(data))
    return cuts


SMALL = ChunkParams(64, 128, 256)


def test_gear_asset_checksum():
    raw = resources.files("dbcn").joinpath("gear.bin").read_bytes()
    assert len(raw) == 256 * 8
    assert hashlib.sha256(raw).hexdigest() == GEAR_SHA256
    assert len(set(int(x) for x in GEAR)) == 256


def test_default_params():
    p = ChunkParams()
    assert (p.min_size, p.target_size, p.max_size) == (4096, 8192, 16384)
    assert p.boundary_mask_bits == 12


@pytest.mark.parametrize("sizes,bits", [((4096, 8192, 16384), 12), ((100, 150, 400), 6),
                                        ((10, 10, 10), 1), ((1000, 1700, 4000), 9)])
def test_mask_bits_rounding(sizes, bits):
    assert ChunkParams(*sizes).boundary_mask_bits == bits
    assert bits == max(1, round(math.log2(max(sizes[1] - sizes[0], 1))))


def test_bad_params():
    with pytest.raises(ValueError):
        ChunkParams(0, 10, 20)
    with pytest.raises(ValueError):
        ChunkParams(10, 5, 20)
    with pytest.raises(ValueError):
        ChunkParams(4096, 8192, 16384, boundary_mask_bits=13)


def test_empty_and_tiny_inputs():
    assert chunk_stream(b"") == []
    (only,) = chunk_stream(bytes(range(100)))
    assert len(only.data) == 100
    assert only.id == hashlib.sha256(bytes(range(100))).digest()


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=5000))
def test_vectorised_scan_matches_reference(data):
    assert cut_points(data, SMALL) == reference_cuts(data, SMALL)


def test_vectorised_scan_matches_reference_default_params():
    data = random.Random(11).randbytes(300_000)
    assert cut_points(data, ChunkParams()) == reference_cuts(data, ChunkParams())


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=4000))
def test_reassembly(data):
    assert b"".join(c.data for c in chunk_stream(data, SMALL)) == data


def test_size_window_and_mean_on_1mib():
    data = random.Random(1).randbytes(1 << 20)
    chunks = chunk_stream(data)
    lengths = [len(c.data) for c in chunks]
    assert len(lengths) >= 100
    assert all(4096 <= n <= 16384 for n in lengths[:-1])
    assert 8192 - 2048 <= sum(lengths) / len(lengths) <= 8192 + 2048


def test_deterministic():
    data = random.Random(2).randbytes(200_000)
    assert chunk_stream(data) == chunk_stream(bytes(data))


def test_insert_only_disturbs_neighbouring_chunks():
    data = random.Random(3).randbytes(1 << 20)
    edited = data[:512_000] + random.Random(4).randbytes(1024) + data[512_000:]
    before = cut_points(data)
    after = cut_points(edited)
    # boundaries strictly before the edit are identical
    left = [c for c in before if c <= 512_000]
    assert after[:len(left)] == left
    # boundaries after resynchronisation are the old ones shifted by the insert
    shifted = {c + 1024 for c in before if c > 512_000}
    tail = [c for c in after if c in shifted]
    assert tail and after[after.index(tail[0]):] == tail
    a_ids = [c.id for c in chunk_stream(data)]
    b_ids = [c.id for c in chunk_stream(edited)]
    assert len(set(b_ids) - set(a_ids)) <= math.ceil(1024 / 4096) + 3


@pytest.mark.parametrize("seed", range(8))
def test_locality_bound(seed):
    rng = random.Random(seed)
    data = rng.randbytes(400_000)
    span = rng.randint(1, 20_000)
    at = rng.randint(0, len(data) - span)
    kind = rng.choice(["insert", "delete", "replace"])
    if kind == "insert":
        edited = data[:at] + rng.randbytes(span) + data[at:]
    elif kind == "delete":
        edited = data[:at] + data[at + span:]
    else:
        edited = data[:at] + rng.randbytes(span) + data[at + span:]
    old = {c.id for c in chunk_stream(data)}
    changed = [c.id for c in chunk_stream(edited) if c.id not in old]
    assert len(changed) <= math.ceil(span / 4096) + 3


def test_duplicate_content_repeats_chunk_ids():
    x = random.Random(5).randbytes(2 * 16384 + 777)
    ids = [c.id for c in chunk_stream(x + x)]
    assert len(ids) > len(set(ids))
