"""Leaf pages, record slots, and the directory above them.

A page owns a half-open key range, a sorted slot array, one abstract LSN per
TC that has data or applied operations on it, and a DC-local dLSN recording
the last structure modification reflected in the page.  The slot array keeps
multi-version state for record sharing: a pending (uncommitted) value plus
the retained before version that foreign read-committed readers observe.

The serialized image is the unit of atomic stable-page writes; the abstract
LSN table travels inside it so a flushed page always self-describes which
operations it reflects.  Slots owned by the same TC are chained by slot index
in the image so a per-TC reset can find them without per-record LSNs.
"""

from __future__ import annotations

import struct
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from typing import Optional

from .types import AbstractLsn
from .wire import decode_ablsn, encode_ablsn

_Q = struct.Struct(">q")
_H = struct.Struct(">H")
_I = struct.Struct(">I")

NO_HIGH = 0xFFFF  # length sentinel: key range extends to +infinity
NO_CHAIN = 0xFFFF


@dataclass(slots=True)
class RecordSlot:
    key: bytes
    committed: Optional[bytes] = None
    before: Optional[bytes] = None       # retained before version (value)
    before_null: bool = False            # before version is the null marker
    uncommitted: Optional[bytes] = None  # pending new value
    uncommitted_delete: bool = False     # pending delete tombstone
    owner_txn: Optional[int] = None      # transaction owning the pending version
    owner_tc: int = 0

    @property
    def has_pending(self) -> bool:
        return self.uncommitted is not None or self.uncommitted_delete

    @property
    def has_before(self) -> bool:
        return self.before is not None or self.before_null

    def copy(self) -> "RecordSlot":
        return RecordSlot(self.key, self.committed, self.before,
                          self.before_null, self.uncommitted,
                          self.uncommitted_delete, self.owner_txn, self.owner_tc)

    def size(self) -> int:
        n = 2 + len(self.key) + 1 + 8 + 2
        if self.committed is not None:
            n += 4 + len(self.committed)
        if self.before is not None:
            n += 4 + len(self.before)
        if self.uncommitted is not None:
            n += 4 + len(self.uncommitted)
        if self.owner_txn is not None:
            n += 8
        return n


class Page:
    """One cached or stable leaf page."""

    __slots__ = ("page_id", "low", "high", "slots", "ab_lsns", "dlsn",
                 "dirty", "pending_sysxact")

    def __init__(self, page_id: int, low: bytes, high: Optional[bytes],
                 dlsn: int = 0):
        self.page_id = page_id
        self.low = low
        self.high = high  # None = +infinity
        self.slots: list[RecordSlot] = []
        self.ab_lsns: dict[int, AbstractLsn] = {}
        self.dlsn = dlsn
        self.dirty = False
        self.pending_sysxact = False  # volatile; blocks flush mid-sysxact

    def contains(self, key: bytes) -> bool:
        return key >= self.low and (self.high is None or key < self.high)

    def find(self, key: bytes) -> Optional[RecordSlot]:
        i = bisect_left(self.slots, key, key=lambda s: s.key)
        if i < len(self.slots) and self.slots[i].key == key:
            return self.slots[i]
        return None

    def put_slot(self, slot: RecordSlot) -> None:
        i = bisect_left(self.slots, slot.key, key=lambda s: s.key)
        if i < len(self.slots) and self.slots[i].key == slot.key:
            self.slots[i] = slot
        else:
            self.slots.insert(i, slot)

    def remove_key(self, key: bytes) -> None:
        i = bisect_left(self.slots, key, key=lambda s: s.key)
        if i < len(self.slots) and self.slots[i].key == key:
            del self.slots[i]

    def slots_in(self, low: bytes, high_incl: bytes) -> list[RecordSlot]:
        lo = bisect_left(self.slots, low, key=lambda s: s.key)
        hi = bisect_right(self.slots, high_incl, key=lambda s: s.key)
        return self.slots[lo:hi]

    def size(self) -> int:
        n = 8 + 2 + len(self.low) + 2 + (len(self.high) if self.high else 0)
        n += 8 + 4 + 2
        for tc, ab in self.ab_lsns.items():
            n += 8 + 10 + 8 * len(ab.lsn_in)
        for s in self.slots:
            n += s.size()
        return n

    def copy(self) -> "Page":
        p = Page(self.page_id, self.low, self.high, self.dlsn)
        p.slots = [s.copy() for s in self.slots]
        p.ab_lsns = dict(self.ab_lsns)
        return p


def encode_page(page: Page) -> bytes:
    out = [_Q.pack(page.page_id), _H.pack(len(page.low)), page.low]
    if page.high is None:
        out.append(_H.pack(NO_HIGH))
    else:
        out.append(_H.pack(len(page.high)) + page.high)
    out.append(_Q.pack(page.dlsn))
    out.append(_I.pack(len(page.slots)))
    out.append(_H.pack(len(page.ab_lsns)))
    for tc in sorted(page.ab_lsns):
        out.append(_Q.pack(tc))
        out.append(encode_ablsn(page.ab_lsns[tc]))
    # chain slots of the same TC by slot index
    next_of: dict[int, int] = {}
    last_seen: dict[int, int] = {}
    for i, s in enumerate(page.slots):
        if s.owner_tc in last_seen:
            next_of[last_seen[s.owner_tc]] = i
        last_seen[s.owner_tc] = i
    for i, s in enumerate(page.slots):
        flags = ((s.committed is not None) |
                 ((s.before is not None) << 1) |
                 (s.before_null << 2) |
                 ((s.uncommitted is not None) << 3) |
                 (s.uncommitted_delete << 4) |
                 ((s.owner_txn is not None) << 5))
        out.append(_H.pack(len(s.key)) + s.key + bytes([flags]))
        if s.committed is not None:
            out.append(_I.pack(len(s.committed)) + s.committed)
        if s.before is not None:
            out.append(_I.pack(len(s.before)) + s.before)
        if s.uncommitted is not None:
            out.append(_I.pack(len(s.uncommitted)) + s.uncommitted)
        if s.owner_txn is not None:
            out.append(_Q.pack(s.owner_txn))
        out.append(_Q.pack(s.owner_tc))
        out.append(_H.pack(next_of.get(i, NO_CHAIN)))
    return b"".join(out)


def decode_page(buf: bytes) -> Page:
    page_id = _Q.unpack_from(buf, 0)[0]
    n = _H.unpack_from(buf, 8)[0]
    off = 10
    low = buf[off:off + n]
    off += n
    hn = _H.unpack_from(buf, off)[0]
    off += 2
    if hn == NO_HIGH:
        high = None
    else:
        high = buf[off:off + hn]
        off += hn
    dlsn = _Q.unpack_from(buf, off)[0]
    nslots = _I.unpack_from(buf, off + 8)[0]
    ntc = _H.unpack_from(buf, off + 12)[0]
    off += 14
    page = Page(page_id, low, high, dlsn)
    for _ in range(ntc):
        tc = _Q.unpack_from(buf, off)[0]
        ab, off = decode_ablsn(buf, off + 8)
        page.ab_lsns[tc] = ab
    for _ in range(nslots):
        kn = _H.unpack_from(buf, off)[0]
        off += 2
        key = buf[off:off + kn]
        off += kn
        flags = buf[off]
        off += 1
        s = RecordSlot(key, before_null=bool(flags & 4),
                       uncommitted_delete=bool(flags & 16))
        if flags & 1:
            vn = _I.unpack_from(buf, off)[0]
            s.committed = buf[off + 4:off + 4 + vn]
            off += 4 + vn
        if flags & 2:
            vn = _I.unpack_from(buf, off)[0]
            s.before = buf[off + 4:off + 4 + vn]
            off += 4 + vn
        if flags & 8:
            vn = _I.unpack_from(buf, off)[0]
            s.uncommitted = buf[off + 4:off + 4 + vn]
            off += 4 + vn
        if flags & 32:
            s.owner_txn = _Q.unpack_from(buf, off)[0]
            off += 8
        s.owner_tc = _Q.unpack_from(buf, off)[0]
        off += 10  # owner_tc + chain_next (chain is derived, verified in tests)
        page.slots.append(s)
    return page


class Directory:
    """Single-level directory over the leaves: separator key -> page id.

    Leaf key ranges partition the whole key space; separators equal leaf low
    keys, so the directory is fully determined by the leaves and is rebuilt
    from them at recovery instead of being logged.
    """

    __slots__ = ("lows", "page_ids")

    def __init__(self):
        self.lows: list[bytes] = []
        self.page_ids: list[int] = []

    def register(self, low: bytes, page_id: int) -> None:
        i = bisect_left(self.lows, low)
        if i < len(self.lows) and self.lows[i] == low:
            self.page_ids[i] = page_id
        else:
            self.lows.insert(i, low)
            self.page_ids.insert(i, page_id)

    def unregister(self, low: bytes) -> None:
        i = bisect_left(self.lows, low)
        if i < len(self.lows) and self.lows[i] == low:
            del self.lows[i]
            del self.page_ids[i]

    def locate(self, key: bytes) -> int:
        i = bisect_right(self.lows, key) - 1
        if i < 0:
            raise KeyError(f"key below all leaf ranges: {key!r}")
        return self.page_ids[i]

    def overlapping(self, low: bytes, high_incl: bytes) -> list[int]:
        i = max(bisect_right(self.lows, low) - 1, 0)
        j = bisect_right(self.lows, high_incl)
        return self.page_ids[i:j]

    def neighbors(self, low: bytes) -> tuple[Optional[int], Optional[int]]:
        i = bisect_left(self.lows, low)
        left = self.page_ids[i - 1] if i > 0 else None
        right = self.page_ids[i + 1] if i + 1 < len(self.page_ids) else None
        return left, right

    def all_page_ids(self) -> list[int]:
        return list(self.page_ids)

    def __len__(self) -> int:
        return len(self.lows)
