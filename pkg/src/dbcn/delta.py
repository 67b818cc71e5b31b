"""Edit scripts over raw bytes and over sequences of digests.

Byte scripts describe a monotone alignment of the previous version: each op
names a range of the old bytes (possibly empty) and the bytes that take its
place. Ops are applied in list order, so a script is only valid when every
op starts at or after the end of the op before it.

Sequence scripts cover the previous id list exactly, left to right, with
KEEP_RUN / DELETE_RUN runs and INSERT_IDS at the current cursor.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import tlv
from .errors import DecodeError, ScriptRangeError
from .naming import DIGEST_SIZE, Digest, split_digests

ANCHOR_WINDOW = 64
ANCHOR_STEP = 16


class DiffType(enum.IntEnum):
    BINARY = 0x01
    TEXT = 0x02  # registered, not implemented


class ByteOpKind(enum.IntEnum):
    INSERT = 1
    REPLACE = 2
    DELETE = 3


@dataclass(frozen=True)
class ByteEditOp:
    op: ByteOpKind
    old_offset: int
    old_len: int
    new_bytes: bytes = b""

    def __post_init__(self) -> None:
        if self.old_offset < 0 or self.old_len < 0:
            raise ScriptRangeError("negative offset or length")
        if self.op is ByteOpKind.INSERT:
            ok = self.old_len == 0 and self.new_bytes
        elif self.op is ByteOpKind.REPLACE:
            ok = self.old_len > 0 and self.new_bytes
        else:
            ok = self.old_len > 0 and not self.new_bytes
        if not ok:
            raise ValueError(f"inconsistent {self.op.name} op: len={self.old_len}, "
                             f"new={len(self.new_bytes)} bytes")

    @property
    def old_end(self) -> int:
        return self.old_offset + self.old_len

    @classmethod
    def for_gap(cls, offset: int, old_len: int, new_bytes: bytes) -> "ByteEditOp | None":
        if old_len and new_bytes:
            return cls(ByteOpKind.REPLACE, offset, old_len, new_bytes)
        if old_len:
            return cls(ByteOpKind.DELETE, offset, old_len)
        if new_bytes:
            return cls(ByteOpKind.INSERT, offset, 0, new_bytes)
        return None

    def encode(self) -> bytes:
        return tlv.tlv(
            tlv.T_OP,
            bytes([self.op]) + tlv.u64(self.old_offset) + tlv.u64(self.old_len)
            + self.new_bytes,
        )

    @classmethod
    def decode_value(cls, value: bytes | memoryview) -> "ByteEditOp":
        if len(value) < 17:
            raise DecodeError("truncated byte edit op")
        try:
            kind = ByteOpKind(value[0])
        except ValueError as exc:
            raise DecodeError(f"unknown byte op {value[0]}") from exc
        try:
            return cls(kind, tlv.read_u64(value[1:9]), tlv.read_u64(value[9:17]),
                       bytes(value[17:]))
        except (ValueError, ScriptRangeError) as exc:
            raise DecodeError(str(exc)) from exc

    @classmethod
    def decode(cls, buf: bytes | memoryview) -> "ByteEditOp":
        return cls.decode_value(tlv.unwrap(buf, tlv.T_OP))


@dataclass(frozen=True)
class ByteEditScript:
    ops: tuple[ByteEditOp, ...] = ()
    diff_type: DiffType = DiffType.BINARY

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        end = 0
        for op in self.ops:
            if op.old_offset < end:
                raise ScriptRangeError(
                    f"op at {op.old_offset} overlaps or precedes previous op ending at {end}"
                )
            end = op.old_end

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def payload_size(self) -> int:
        return sum(len(op.new_bytes) for op in self.ops)

    def check_range(self, old_len: int) -> None:
        if self.ops and self.ops[-1].old_end > old_len:
            raise ScriptRangeError(
                f"op ends at {self.ops[-1].old_end}, previous version has {old_len} bytes"
            )

    def encode(self) -> bytes:
        body = tlv.tlv(tlv.T_DIFF_TYPE, bytes([self.diff_type]))
        return tlv.tlv(tlv.T_SCRIPT, body + b"".join(op.encode() for op in self.ops))

    @classmethod
    def decode(cls, buf: bytes | memoryview) -> "ByteEditScript":
        r = tlv.Reader(tlv.unwrap(buf, tlv.T_SCRIPT))
        dt = r.take(tlv.T_DIFF_TYPE)
        if len(dt) != 1 or dt[0] not in (DiffType.BINARY, DiffType.TEXT):
            raise DecodeError("bad diff type")
        ops = [ByteEditOp.decode_value(v) for v in r.rest(tlv.T_OP)]
        r.done()
        if dt[0] != DiffType.BINARY:
            raise NotImplementedError("text diffs are registered but not implemented")
        try:
            return cls(tuple(ops))
        except ScriptRangeError as exc:
            raise DecodeError(str(exc)) from exc

    def split(self, max_new_bytes: int) -> "ByteEditScript":
        """Equivalent script whose ops each carry at most ``max_new_bytes``."""
        out: list[ByteEditOp] = []
        for op in self.ops:
            if len(op.new_bytes) <= max_new_bytes:
                out.append(op)
                continue
            nb = op.new_bytes
            head = ByteEditOp.for_gap(op.old_offset, op.old_len, nb[:max_new_bytes])
            out.append(head)
            for i in range(max_new_bytes, len(nb), max_new_bytes):
                out.append(ByteEditOp(ByteOpKind.INSERT, op.old_end, 0,
                                      nb[i:i + max_new_bytes]))
        return ByteEditScript(tuple(out), self.diff_type)


# --------------------------------------------------------------------------- #
# byte diff
# --------------------------------------------------------------------------- #


def _common_prefix(a: memoryview, ai: int, b: memoryview, bi: int, limit: int) -> int:
    """Length of the common run ``a[ai:] / b[bi:]``, at most ``limit``."""
    n = 0
    step = 64
    while n < limit:
        s = min(step, limit - n)
        if a[ai + n:ai + n + s] == b[bi + n:bi + n + s]:
            n += s
            step *= 2
        elif s == 1:
            break
        else:
            step = max(1, s // 2)
    return n


def _common_suffix(a: memoryview, aend: int, b: memoryview, bend: int, limit: int) -> int:
    """Length of the common run ending at ``a[:aend] / b[:bend]``."""
    n = 0
    step = 64
    while n < limit:
        s = min(step, limit - n)
        if a[aend - n - s:aend - n] == b[bend - n - s:bend - n]:
            n += s
            step *= 2
        elif s == 1:
            break
        else:
            step = max(1, s // 2)
    return n


def byte_diff(old: bytes, new: bytes) -> ByteEditScript:
    """Anchor-based greedy binary diff.

    Common prefix and suffix are stripped first. The middle of ``old`` is
    indexed by 64-byte windows sampled every 16 bytes; ``new`` is scanned for
    windows found in the index at or after the current old cursor, each hit is
    extended in both directions, and the gaps between hits become ops.
    """
    if old == new:
        return ByteEditScript()
    a, b = memoryview(old), memoryview(new)
    pre = _common_prefix(a, 0, b, 0, min(len(a), len(b)))
    suf = _common_suffix(a, len(a), b, len(b), min(len(a), len(b)) - pre)
    a_end, b_end = len(a) - suf, len(b) - suf

    ops: list[ByteEditOp] = []

    def gap(o0: int, o1: int, n0: int, n1: int) -> None:
        op = ByteEditOp.for_gap(o0, o1 - o0, bytes(b[n0:n1]))
        if op is not None:
            ops.append(op)

    W = ANCHOR_WINDOW
    if a_end - pre < W or b_end - pre < W:
        gap(pre, a_end, pre, b_end)
        return ByteEditScript(tuple(ops))

    index: dict[bytes, list[int]] = {}
    for o in range(pre, a_end - W + 1, ANCHOR_STEP):
        index.setdefault(bytes(a[o:o + W]), []).append(o)

    old_cur, new_cur = pre, pre
    j = pre
    while j + W <= b_end:
        offs = index.get(bytes(b[j:j + W]))
        if offs:
            k = bisect.bisect_left(offs, old_cur)
            if k < len(offs):
                o = offs[k]
                back = _common_suffix(a, o, b, j, min(o - old_cur, j - new_cur))
                fwd = _common_prefix(a, o + W, b, j + W, min(a_end - o - W, b_end - j - W))
                gap(old_cur, o - back, new_cur, j - back)
                old_cur, new_cur = o + W + fwd, j + W + fwd
                j = new_cur
                continue
        j += 1
    gap(old_cur, a_end, new_cur, b_end)
    return ByteEditScript(tuple(ops))


# --------------------------------------------------------------------------- #
# interval map
# --------------------------------------------------------------------------- #


class IntervalMap:
    """Ordered map from output ranges to slices of source buffers.

    Applying a script rewrites the piece list without copying any bytes, so a
    stack of scripts composes and only the final version is materialised.
    """

    __slots__ = ("_pieces", "_starts", "length")

    def __init__(self, sources: Iterable[bytes] = ()):
        self._pieces: list[tuple[bytes, int, int]] = [
            (s, 0, len(s)) for s in sources if len(s)
        ]
        self._reindex()

    def _reindex(self) -> None:
        starts, pos = [], 0
        for _, _, n in self._pieces:
            starts.append(pos)
            pos += n
        self._starts = starts
        self.length = pos

    def __len__(self) -> int:
        return self.length

    @property
    def piece_count(self) -> int:
        return len(self._pieces)

    def _slice(self, lo: int, hi: int, out: list[tuple[bytes, int, int]]) -> None:
        if lo >= hi:
            return
        i = bisect.bisect_right(self._starts, lo) - 1
        while lo < hi:
            buf, off, n = self._pieces[i]
            start = self._starts[i]
            a = lo - start
            take = min(n - a, hi - lo)
            _append(out, buf, off + a, take)
            lo += take
            i += 1

    def apply(self, script: ByteEditScript) -> "IntervalMap":
        script.check_range(self.length)
        out: list[tuple[bytes, int, int]] = []
        cursor = 0
        for op in script.ops:
            self._slice(cursor, op.old_offset, out)
            if op.new_bytes:
                _append(out, op.new_bytes, 0, len(op.new_bytes))
            cursor = op.old_end
        self._slice(cursor, self.length, out)
        result = IntervalMap()
        result._pieces = out
        result._reindex()
        return result

    def materialize(self) -> bytes:
        return b"".join(memoryview(buf)[off:off + n] for buf, off, n in self._pieces)


def _append(out: list[tuple[bytes, int, int]], buf: bytes, off: int, n: int) -> None:
    if n <= 0:
        return
    if out:
        pbuf, poff, pn = out[-1]
        if pbuf is buf and poff + pn == off:
            out[-1] = (buf, poff, pn + n)
            return
    out.append((buf, off, n))


def byte_apply(old: bytes, script: ByteEditScript) -> bytes:
    return IntervalMap([old]).apply(script).materialize()


def apply_stack(base: Iterable[bytes], scripts: Iterable[ByteEditScript]) -> bytes:
    """Apply scripts in order on top of the concatenation of ``base``."""
    m = IntervalMap(base)
    for script in scripts:
        m = m.apply(script)
    return m.materialize()


# --------------------------------------------------------------------------- #
# sequence diff
# --------------------------------------------------------------------------- #


class SeqOpKind(enum.IntEnum):
    KEEP_RUN = tlv.T_KEEP_RUN
    INSERT_IDS = tlv.T_INSERT_IDS
    DELETE_RUN = tlv.T_DELETE_RUN


@dataclass(frozen=True)
class SeqEditOp:
    op: SeqOpKind
    old_index: int
    count: int
    ids: tuple[Digest, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        if self.old_index < 0:
            raise ScriptRangeError("negative index")
        if self.op is SeqOpKind.INSERT_IDS:
            if not self.ids or self.count != len(self.ids):
                raise ValueError("INSERT_IDS needs ids and count == len(ids)")
        elif self.ids or self.count <= 0:
            raise ValueError(f"{self.op.name} needs a positive count and no ids")

    @classmethod
    def keep(cls, index: int, count: int) -> "SeqEditOp":
        return cls(SeqOpKind.KEEP_RUN, index, count)

    @classmethod
    def delete(cls, index: int, count: int) -> "SeqEditOp":
        return cls(SeqOpKind.DELETE_RUN, index, count)

    @classmethod
    def insert(cls, index: int, ids: Sequence[Digest]) -> "SeqEditOp":
        return cls(SeqOpKind.INSERT_IDS, index, len(ids), tuple(ids))

    def encode(self) -> bytes:
        if self.op is SeqOpKind.INSERT_IDS:
            return tlv.tlv(self.op, tlv.u64(self.old_index) + b"".join(self.ids))
        return tlv.tlv(self.op, tlv.u64(self.old_index) + tlv.u64(self.count))

    @classmethod
    def decode_tlv(cls, type_code: int, value: memoryview) -> "SeqEditOp":
        try:
            kind = SeqOpKind(type_code)
        except ValueError as exc:
            raise DecodeError(f"unknown sequence op 0x{type_code:04x}") from exc
        if len(value) < 8:
            raise DecodeError("truncated sequence op")
        index = tlv.read_u64(value[:8])
        try:
            if kind is SeqOpKind.INSERT_IDS:
                ids = split_digests(value[8:])
                return cls(kind, index, len(ids), tuple(ids))
            return cls(kind, index, tlv.read_u64(value[8:], "count"))
        except (ValueError, ScriptRangeError) as exc:
            raise DecodeError(str(exc)) from exc


def encode_seq_ops(ops: Sequence[SeqEditOp]) -> bytes:
    return tlv.tlv(tlv.T_SEQ_SCRIPT, b"".join(op.encode() for op in ops))


def decode_seq_ops(value: bytes | memoryview) -> tuple[SeqEditOp, ...]:
    """Decode the value of a sequence-script TLV."""
    return tuple(SeqEditOp.decode_tlv(t, v) for t, v in tlv.iter_tlv(value))


def _myers_moves(a: Sequence, b: Sequence) -> list[str]:
    """Shortest edit path as a list of '=', '-', '+' moves (Myers, O(ND))."""
    n, m = len(a), len(b)
    if n == 0:
        return ["+"] * m
    if m == 0:
        return ["-"] * n
    off = n + m + 1
    v = [0] * (2 * off + 1)
    trace: list[list[int]] = []
    final_d = None
    for d in range(n + m + 1):
        trace.append(v[off - d - 1:off + d + 2])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[off + k - 1] < v[off + k + 1]):
                x = v[off + k + 1]
            else:
                x = v[off + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[off + k] = x
            if x >= n and y >= m:
                final_d = d
                break
        if final_d is not None:
            break

    moves: list[str] = []
    x, y = n, m
    for d in range(final_d, 0, -1):
        vd = trace[d]  # state before step d, covering k in [-d-1, d+1]

        def at(k: int) -> int:
            return vd[k + d + 1]

        k = x - y
        if k == -d or (k != d and at(k - 1) < at(k + 1)):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = at(prev_k)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            moves.append("=")
            x -= 1
            y -= 1
        moves.append("+" if x == prev_x else "-")
        x, y = prev_x, prev_y
    moves.extend("=" * x)
    moves.reverse()
    return moves


def seq_diff(old_ids: Sequence[Digest], new_ids: Sequence[Digest]) -> list[SeqEditOp]:
    """LCS alignment of two id lists as KEEP/DELETE runs and INSERT_IDS."""
    n, m = len(old_ids), len(new_ids)
    pre = 0
    while pre < n and pre < m and old_ids[pre] == new_ids[pre]:
        pre += 1
    suf = 0
    while suf < n - pre and suf < m - pre and old_ids[n - 1 - suf] == new_ids[m - 1 - suf]:
        suf += 1
    middle = _myers_moves(old_ids[pre:n - suf], new_ids[pre:m - suf])
    moves = ["="] * pre + middle + ["="] * suf

    ops: list[SeqEditOp] = []
    i = j = 0
    pos = 0
    while pos < len(moves):
        if moves[pos] == "=":
            start = i
            while pos < len(moves) and moves[pos] == "=":
                i += 1
                j += 1
                pos += 1
            ops.append(SeqEditOp.keep(start, i - start))
            continue
        # a maximal changed block: all deletions first, then all insertions
        del_start, ins_start = i, j
        while pos < len(moves) and moves[pos] != "=":
            if moves[pos] == "-":
                i += 1
            else:
                j += 1
            pos += 1
        if i > del_start:
            ops.append(SeqEditOp.delete(del_start, i - del_start))
        if j > ins_start:
            ops.append(SeqEditOp.insert(i, new_ids[ins_start:j]))
    return ops


def seq_apply(old_ids: Sequence[Digest], ops: Iterable[SeqEditOp]) -> list[Digest]:
    out: list[Digest] = []
    cursor = 0
    n = len(old_ids)
    for op in ops:
        if op.old_index != cursor:
            raise ScriptRangeError(
                f"{op.op.name} at {op.old_index}, expected cursor {cursor}"
            )
        if op.op is SeqOpKind.INSERT_IDS:
            out.extend(op.ids)
            continue
        if cursor + op.count > n:
            raise ScriptRangeError(f"{op.op.name} runs past end of {n}-entry list")
        if op.op is SeqOpKind.KEEP_RUN:
            out.extend(old_ids[cursor:cursor + op.count])
        cursor += op.count
    if cursor != n:
        raise ScriptRangeError(f"ops cover {cursor} of {n} previous entries")
    return out


__all__ = [
    "ANCHOR_STEP", "ANCHOR_WINDOW", "ByteEditOp", "ByteEditScript", "ByteOpKind",
    "DiffType", "IntervalMap", "SeqEditOp", "SeqOpKind", "apply_stack", "byte_apply",
    "byte_diff", "decode_seq_ops", "encode_seq_ops", "seq_apply", "seq_diff",
    "DIGEST_SIZE",
]
