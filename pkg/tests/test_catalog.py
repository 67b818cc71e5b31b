import random
from dataclasses import replace

import pytest

from conftest import digests, mutate
from dbcn.catalog import (
    BinaryDiffSegments,
    ByteOffsetObjects,
    CatalogTree,
    ChunkEnumeration,
    ChunkSeqDiff,
    EncodingParams,
    SecureCatalog,
    SegmentReplace,
    SignatureBlock,
    Variant,
    make_diff_version,
    make_ground_truth,
    reconstruct,
    required_objects,
    resolve_byte_plan,
    resolve_chunks,
    resolve_segments,
    sign_catalog,
    verify_catalog,
    verify_catalog_bytes,
    verify_path,
)
from dbcn.delta import SeqEditOp, seq_apply, seq_diff
from dbcn.errors import (
    BodyError,
    CycleError,
    DanglingParentError,
    UnsupportedSchemeError,
    VerificationError,
)
from dbcn.naming import ContentObject, PayloadKind, parse_name
from dbcn.publish import ConsolidationPolicy, Publisher
from dbcn.store import MemoryStore

NAME = parse_name("/parc/csl/paper.doc")


def v(n):
    return NAME.with_version(n)


def chain_tree(key, bodies):
    """Linear chain: catalog i lists catalog i-1 as its only parent."""
    tree = CatalogTree()
    prev = None
    for i, body in enumerate(bodies):
        cat = sign_catalog(v(i), () if prev is None else (prev,), body, key)
        prev = tree.add(cat)
    return tree


# --------------------------------------------------------------------------- signing

def small_v5_catalog(key):
    parent = sign_catalog(v(0), (), ChunkEnumeration(NAME, tuple(digests(3))), key)
    body = ChunkSeqDiff((SeqEditOp.keep(0, 2), SeqEditOp.insert(2, digests(1, "x")),
                         SeqEditOp.delete(2, 1)))
    return sign_catalog(v(1), (parent.digest,), body, key)


def test_sign_then_verify(key, other_key):
    cat = small_v5_catalog(key)
    assert verify_catalog(cat, key.public_key)
    assert not verify_catalog(cat, other_key.public_key)
    assert SecureCatalog.decode(cat.encode()) == cat


def test_exhaustive_single_byte_corruption_rejected(key):
    cat = small_v5_catalog(key)
    buf = cat.encode()
    assert verify_catalog_bytes(buf, key.public_key)
    for i in range(len(buf)):
        for replacement in [buf[i] ^ (1 << bit) for bit in range(8)] + [(buf[i] + 1) % 256]:
            bad = bytearray(buf)
            bad[i] = replacement
            assert not verify_catalog_bytes(bytes(bad), key.public_key), i


def test_unknown_scheme(key):
    cat = small_v5_catalog(key)
    forged = replace(cat, signature=SignatureBlock(0x7F, cat.signature.public_key_digest,
                                                   cat.signature.signature_bytes))
    with pytest.raises(UnsupportedSchemeError):
        verify_catalog(forged, key.public_key)


@pytest.mark.parametrize("body,parents", [
    (SegmentReplace(((1, digests(1)[0]), (1, digests(2)[1])), 4), ()),
    (SegmentReplace(((5, digests(1)[0]),), 4), ()),
    (ChunkSeqDiff((SeqEditOp.keep(0, 1),)), ()),
    (ChunkEnumeration(NAME, ()), tuple(digests(1))),
])
def test_invalid_bodies(key, body, parents):
    with pytest.raises(BodyError):
        sign_catalog(v(1), parents, body, key)


def test_catalog_name_needs_version(key):
    with pytest.raises(BodyError):
        sign_catalog(NAME, (), ChunkEnumeration(NAME), key)


# --------------------------------------------------------------------------- tree

def test_tree_rejects_non_increasing_versions(key):
    tree = CatalogTree()
    d5 = tree.add(sign_catalog(v(5), (), ChunkEnumeration(NAME), key))
    with pytest.raises(CycleError):
        tree.add(sign_catalog(v(3), (d5,), ChunkSeqDiff(()), key))


def test_dangling_parent(key):
    tree = CatalogTree()
    tree.add(sign_catalog(v(1), tuple(digests(1)), ChunkSeqDiff(()), key))
    with pytest.raises(DanglingParentError):
        resolve_chunks(tree, 1)


def test_post_order_visits_parents_left_to_right(key):
    tree = CatalogTree()
    d0 = tree.add(sign_catalog(v(0), (), ChunkEnumeration(NAME, tuple(digests(2))), key))
    d1 = tree.add(sign_catalog(v(1), (d0,), ChunkSeqDiff((SeqEditOp.keep(0, 2),)), key))
    d2 = tree.add(sign_catalog(v(2), (d0, d1), ChunkSeqDiff((SeqEditOp.keep(0, 2),)), key))
    assert tree.post_order(2) == [d0, d1, d2]
    assert tree.chain(2) == [d0, d1, d2]


# --------------------------------------------------------------------------- resolution

def test_identity_diff_resolves_to_ground_truth(key):
    ids = digests(6)
    tree = chain_tree(key, [ChunkEnumeration(NAME, tuple(ids)),
                            ChunkSeqDiff((SeqEditOp.keep(0, 6),))])
    assert resolve_chunks(tree, 1) == ids


def naive_seq(old, ops):
    """Independent sequential application: walk ops with an explicit cursor."""
    out, i = [], 0
    for op in ops:
        kind = op.op.name
        if kind == "KEEP_RUN":
            out += old[i:i + op.count]
            i += op.count
        elif kind == "DELETE_RUN":
            i += op.count
        else:
            out += list(op.ids)
    assert i == len(old)
    return out


def test_random_v5_chains_match_sequential_oracle(key):
    rng = random.Random(3)
    pool = digests(200)
    for _ in range(40):
        lists = [rng.sample(pool, rng.randint(0, 30))]
        bodies = [ChunkEnumeration(NAME, tuple(lists[0]))]
        for _ in range(rng.randint(1, 10)):
            new = [d for d in lists[-1] if rng.random() < 0.8]
            for d in rng.sample(pool, rng.randint(0, 5)):
                new.insert(rng.randint(0, len(new)), d)
            bodies.append(ChunkSeqDiff(tuple(seq_diff(lists[-1], new))))
            lists.append(new)
        tree = chain_tree(key, bodies)
        expected = list(bodies[0].ids)
        for i, body in enumerate(bodies[1:], start=1):
            expected = naive_seq(expected, body.ops)
            assert resolve_chunks(tree, i) == expected == lists[i]


def test_multi_parent_applies_ops_to_last_parent(key):
    ids = digests(4)
    tree = CatalogTree()
    d0 = tree.add(sign_catalog(v(0), (), ChunkEnumeration(NAME, tuple(ids)), key))
    v1_ops = (SeqEditOp.keep(0, 4), SeqEditOp.insert(4, digests(2, "b")))
    d1 = tree.add(sign_catalog(v(1), (d0,), ChunkSeqDiff(v1_ops), key))
    v2_ops = (SeqEditOp.delete(0, 1), SeqEditOp.keep(1, 5))
    tree.add(sign_catalog(v(2), (d0, d1), ChunkSeqDiff(v2_ops), key))
    v1_list = seq_apply(ids, v1_ops)
    assert resolve_chunks(tree, 2) == seq_apply(v1_list, v2_ops)
    # the first parent still contributes to what must be cached
    assert set(ids) <= set(required_objects(tree, 2))


def test_v2_eight_segments_two_replaced(key):
    seg = digests(8, "seg")
    new = digests(2, "new")
    tree = chain_tree(key, [
        SegmentReplace(tuple(enumerate(seg)), 8),
        SegmentReplace(((2, new[0]), (5, new[1])), 8),
    ])
    resolved = resolve_segments(tree, 1)
    assert len(resolved) == 8
    assert sum(d in seg for d in resolved.values()) == 6
    assert resolved[2] == new[0] and resolved[5] == new[1]


def test_v2_rightmost_occurrence_wins_across_versions(key):
    seg = digests(3, "seg")
    a, b = digests(2, "r")
    tree = chain_tree(key, [
        SegmentReplace(tuple(enumerate(seg)), 3),
        SegmentReplace(((1, a),), 3),
        SegmentReplace(((1, b),), 3),
    ])
    assert resolve_segments(tree, 2)[1] == b
    assert resolve_segments(tree, 1)[1] == a


def test_v2_duplicate_entry_in_one_catalog_is_rejected(key):
    # two entries for the same segment inside one catalog are ambiguous
    a, b = digests(2, "r")
    with pytest.raises(BodyError):
        sign_catalog(v(1), tuple(digests(1)), SegmentReplace(((0, a), (0, b)), 1), key)


def test_v2_count_shrink_drops_trailing_segments(key):
    seg = digests(4, "seg")
    tree = chain_tree(key, [SegmentReplace(tuple(enumerate(seg)), 4), SegmentReplace((), 2)])
    assert list(resolve_segments(tree, 1).values()) == seg[:2]


def test_random_v2_chains_match_overwrite_oracle(key):
    rng = random.Random(4)
    pool = digests(500)
    for _ in range(40):
        count = rng.randint(0, 12)
        bodies = [SegmentReplace(tuple((k, rng.choice(pool)) for k in range(count)), count)]
        oracle = [dict(bodies[0].entries)]
        for _ in range(rng.randint(1, 10)):
            ks = rng.sample(range(count), rng.randint(0, count)) if count else []
            body = SegmentReplace(tuple((k, rng.choice(pool)) for k in ks), count)
            bodies.append(body)
            state = dict(oracle[-1])
            for k, d in body.entries:
                state[k] = d
            oracle.append(state)
        tree = chain_tree(key, bodies)
        for i, expected in enumerate(oracle):
            assert resolve_segments(tree, i) == expected


def test_byte_plan_depths(key):
    rng = random.Random(8)
    store = MemoryStore()
    pub = Publisher(store, NAME, "v3", key)
    data = rng.randbytes(20_000)
    pub.publish(data)
    plan = resolve_byte_plan(pub.tree, 0, store.get_object)
    assert len(plan) == 1 and plan.scripts[0].ops == ()
    pub.publish(data[:100] + b"X" * 10 + data[110:])
    plan = resolve_byte_plan(pub.tree, 1, store.get_object)
    assert len(plan) == 2 and len(plan.scripts[1]) == 1


# --------------------------------------------------------------------------- encoding

def test_empty_v4_ground_truth(key):
    cat, objs = make_ground_truth(NAME, b"", "v4", EncodingParams(), key)
    assert cat.body.ids == () and objs == []
    tree = CatalogTree([cat])
    assert reconstruct(tree, 0, lambda d: pytest.fail("no fetch expected")) == b""


def test_ten_mib_chunk_count_bounds(key):
    data = random.Random(10).randbytes(10 << 20)
    cat, objs = make_ground_truth(NAME, data, "v4", EncodingParams(), key)
    assert (10 << 20) // 16384 <= len(cat.body.ids) <= (10 << 20) // 4096
    assert 640 <= len(cat.body.ids) <= 2560


@pytest.mark.parametrize("variant", list(Variant))
def test_round_trip_every_variant(key, variant):
    rng = random.Random(int(variant))
    store = MemoryStore()
    pub = Publisher(store, NAME, variant, key, EncodingParams(segment_size=1024),
                    ConsolidationPolicy(max_depth=4))
    history = []
    data = rng.randbytes(60_000)
    for _ in range(10):
        pub.publish(data)
        history.append(data)
        data = mutate(data, rng, span=2000)
    for i, expected in enumerate(history):
        assert reconstruct(pub.tree, i, store.get_object) == expected
        assert verify_path(pub.tree, i, [key.public_key]) == len(pub.tree.post_order(i))


@pytest.mark.parametrize("variant", list(Variant))
def test_identical_publish_emits_nothing(key, variant):
    data = random.Random(1).randbytes(50_000)
    store = MemoryStore()
    cat0, objs0 = make_ground_truth(NAME, data, variant, EncodingParams(), key)
    for o in objs0:
        store.put(o)
    tree = CatalogTree([cat0])
    cat1, objs1 = make_diff_version(tree, [0], data, variant, EncodingParams(), key,
                                    store.get_object)
    assert objs1 == []
    if variant is Variant.V5:
        assert cat1.body.ops == (SeqEditOp.keep(0, len(cat0.body.ids)),)
    elif variant in (Variant.V1, Variant.V3):
        assert len(cat1.body.segments if variant is Variant.V1 else cat1.body.objects) == 0
    elif variant is Variant.V2:
        assert cat1.body.entries == ()


def test_v5_one_kib_change_in_ten_mib(key):
    rng = random.Random(12)
    data = rng.randbytes(10 << 20)
    new = data[:7_000_000] + rng.randbytes(1024) + data[7_001_024:]
    store = MemoryStore()
    cat0, objs0 = make_ground_truth(NAME, data, "v5", EncodingParams(), key)
    for o in objs0:
        store.put(o)
    tree = CatalogTree([cat0])
    cat1, objs1 = make_diff_version(tree, [0], new, "v5", EncodingParams(), key,
                                    store.get_object)
    assert sum(len(o.payload) for o in objs1) <= 5 * 16384
    tree.add(cat1)
    for o in objs1:
        store.put(o)
    assert reconstruct(tree, 1, store.get_object) == new


def test_v2_insertion_reemits_shifted_segments(key):
    rng = random.Random(13)
    data = rng.randbytes(64 * 8192)
    store = MemoryStore()
    cat0, objs0 = make_ground_truth(NAME, data, "v2", EncodingParams(), key)
    for o in objs0:
        store.put(o)
    tree = CatalogTree([cat0])
    shifted = data[:8192 * 10] + b"!" * 100 + data[8192 * 10:]
    _, objs = make_diff_version(tree, [0], shifted, "v2", EncodingParams(), key,
                                store.get_object)
    # every segment from the insertion point onward moves
    assert len(objs) == 65 - 10


def test_wrong_family_parent_is_refused(key):
    cat0, _ = make_ground_truth(NAME, b"abc", "v4", EncodingParams(), key)
    with pytest.raises(BodyError):
        make_diff_version(CatalogTree([cat0]), [0], b"abcd", "v1", EncodingParams(), key,
                          lambda d: None)


def test_tampered_chunk_is_detected(key):
    data = random.Random(14).randbytes(30_000)
    cat, objs = make_ground_truth(NAME, data, "v4", EncodingParams(), key)
    by_digest = {o.digest: o for o in objs}
    evil = ContentObject(objs[0].name, b"evil", PayloadKind.CHUNK)

    def fetch(d):
        return evil if d == objs[0].digest else by_digest[d]

    with pytest.raises(VerificationError):
        reconstruct(CatalogTree([cat]), 0, fetch)


def test_verify_path_rejects_untrusted_signer(key, other_key):
    cat, _ = make_ground_truth(NAME, b"", "v5", EncodingParams(), other_key)
    with pytest.raises(VerificationError):
        verify_path(CatalogTree([cat]), 0, [key.public_key])


def test_v1_and_v3_bodies_share_ground_truth_shape(key):
    c1, o1 = make_ground_truth(NAME, b"x" * 20_000, "v1", EncodingParams(), key)
    c3, o3 = make_ground_truth(NAME, b"x" * 20_000, "v3", EncodingParams(), key)
    assert isinstance(c1.body, BinaryDiffSegments) and isinstance(c3.body, ByteOffsetObjects)
    assert c1.body.segments == c3.body.objects
    assert [o.digest for o in o1] == [o.digest for o in o3]
