"""Shared vocabulary for the unbundled kernel.

The transaction component (TC) and the data component (DC) interact only
through record-oriented logical operations, correlated replies, and a small
contract-message set.  Every write operation carries a log sequence number
(LSN) that is unique and monotonically increasing per TC; the DC tracks which
operations a page already reflects with an *abstract LSN*: a pair of a
low-water LSN plus the explicit set of higher LSNs whose effects are also
present.  The abstract form is what makes out-of-order arrival safe: a plain
"op LSN <= page LSN" test would wrongly treat a late-arriving lower LSN as
already applied.

Everything in this module is an immutable value; the algebra functions are
pure.  Read requests are correlated with *negative* sequence numbers so that
the positive LSN space contains exactly the logged records (reads are never
logged and must never be claimed by a page's cover set).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

Lsn = int  # positive, strictly increasing per issuing TC; 0 = before all ops

# operation kinds
INSERT = "insert"
UPDATE = "update"
DELETE = "delete"
READ = "read"
RANGE_READ = "range_read"
COMMIT_VERSIONS = "commit_versions"
ABORT_VERSIONS = "abort_versions"

WRITE_KINDS = frozenset({INSERT, UPDATE, DELETE, COMMIT_VERSIONS, ABORT_VERSIONS})
READ_KINDS = frozenset({READ, RANGE_READ})

# read flavors
F_COMMITTED = "committed"  # foreign read-committed: before-version if present
F_OWN = "own"              # own partition: sees the issuing txn's uncommitted value
F_DIRTY = "dirty"          # newest value present, committed or not


@dataclass(frozen=True, slots=True)
class AbstractLsn:
    """``<lsn_lw, {lsn_in}>``: which operations of one TC a page reflects.

    Covers every LSN <= lsn_lw plus the explicit members of lsn_in; lsn_in is
    kept sorted ascending and contains only values strictly above lsn_lw.
    """

    lsn_lw: Lsn = 0
    lsn_in: tuple[Lsn, ...] = ()

    def __post_init__(self):
        if any(x <= self.lsn_lw for x in self.lsn_in):
            raise ValueError("lsn_in member not above lsn_lw")
        if list(self.lsn_in) != sorted(set(self.lsn_in)):
            raise ValueError("lsn_in not strictly ascending")

    def cover(self) -> frozenset[Lsn]:
        """Explicit cover set; only sensible for small LSN domains (tests)."""
        return frozenset(range(1, self.lsn_lw + 1)) | frozenset(self.lsn_in)

    def max_covered(self) -> Lsn:
        return self.lsn_in[-1] if self.lsn_in else self.lsn_lw


ABLSN_ZERO = AbstractLsn(0, ())


def ablsn_covers(op: Lsn, a: AbstractLsn) -> bool:
    return op <= a.lsn_lw or op in a.lsn_in


def ablsn_record(a: AbstractLsn, op: Lsn) -> AbstractLsn:
    """Extend the cover with one newly applied operation.

    Recording an already-covered LSN signals a double apply somewhere up the
    stack, so it raises rather than silently succeeding.
    """
    if ablsn_covers(op, a):
        raise ValueError(f"LSN {op} already covered by {a}")
    return AbstractLsn(a.lsn_lw, tuple(sorted(a.lsn_in + (op,))))


def ablsn_advance(a: AbstractLsn, lwm: Lsn) -> AbstractLsn:
    """Raise the low-water mark and prune explicit members it absorbs.

    A low-water mark below the current one never regresses the cover.
    """
    if lwm <= a.lsn_lw:
        return a
    return AbstractLsn(lwm, tuple(x for x in a.lsn_in if x > lwm))


def ablsn_merge(a: AbstractLsn, b: AbstractLsn) -> AbstractLsn:
    """Cover-union of two abstract LSNs (used when pages consolidate)."""
    lw = max(a.lsn_lw, b.lsn_lw)
    ins = tuple(sorted(set(a.lsn_in) | set(b.lsn_in)))
    return AbstractLsn(lw, tuple(x for x in ins if x > lw))


@dataclass(frozen=True, slots=True)
class LogicalOp:
    """One record-oriented request from a TC to a DC.

    ``(tc_id, lsn)`` is the globally unique operation id; resends reuse it.
    Write ops carry positive LSNs (the TC-log record LSN); reads use negative
    correlation ids so the logged LSN space stays gap-free.
    """

    tc_id: int
    lsn: int
    table: str
    kind: str
    key: Optional[bytes] = None
    key_high: Optional[bytes] = None  # inclusive upper bound for range reads
    payload: Optional[bytes] = None
    versioned: bool = False
    read_flavor: str = F_COMMITTED
    reader_txn: Optional[int] = None  # for F_OWN reads

    @property
    def op_id(self) -> tuple[int, int]:
        return (self.tc_id, self.lsn)

    def __post_init__(self):
        if self.kind in (INSERT, UPDATE) and self.payload is None:
            raise ValueError(f"{self.kind} requires a payload")
        if self.kind in (DELETE, READ) and self.payload is not None:
            raise ValueError(f"{self.kind} carries no payload")
        if self.kind == RANGE_READ and (self.key is None or self.key_high is None):
            raise ValueError("range_read requires a closed key interval")
        if self.kind in WRITE_KINDS and self.lsn <= 0:
            raise ValueError("write ops carry positive LSNs")
        if self.kind in READ_KINDS and self.lsn >= 0:
            raise ValueError("read ops use negative correlation ids")


STATUS_OK = "ok"
ERR_KEY_EXISTS = "key_exists"
ERR_KEY_ABSENT = "key_absent"
ERR_TOO_LARGE = "record_too_large"


@dataclass(frozen=True, slots=True)
class OpReply:
    tc_id: int
    lsn: int
    status: str = STATUS_OK
    value: Optional[bytes] = None            # single read result (None = absent)
    values: Optional[tuple[tuple[bytes, bytes], ...]] = None  # range read result

    @property
    def op_id(self) -> tuple[int, int]:
        return (self.tc_id, self.lsn)


def inverse_of(op: LogicalOp, before: Optional[bytes], fresh_lsn: Lsn) -> LogicalOp:
    """Logical inverse used for rollback, under a caller-assigned fresh LSN.

    insert(k,v) -> delete(k); delete(k) -> insert(k, before);
    update(k,v') -> update(k, before).
    """
    if op.kind == INSERT:
        return LogicalOp(op.tc_id, fresh_lsn, op.table, DELETE, key=op.key,
                         versioned=op.versioned)
    if op.kind == DELETE:
        if before is None:
            raise ValueError("delete inverse requires the before image")
        return LogicalOp(op.tc_id, fresh_lsn, op.table, INSERT, key=op.key,
                         payload=before, versioned=op.versioned)
    if op.kind == UPDATE:
        if before is None:
            raise ValueError("update inverse requires the before image")
        return LogicalOp(op.tc_id, fresh_lsn, op.table, UPDATE, key=op.key,
                         payload=before, versioned=op.versioned)
    raise ValueError(f"no inverse for {op.kind}")


# ---------------------------------------------------------------------------
# Contract messages between TC and DC.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class EndOfStableLog:
    """EOSL: largest LSN stably logged; the DC may persist effects <= it."""
    tc_id: int
    eosl: Lsn


@dataclass(frozen=True, slots=True)
class LowWaterMark:
    """LWM: the TC has replies for every operation LSN <= lwm (no gaps)."""
    tc_id: int
    lwm: Lsn


@dataclass(frozen=True, slots=True)
class Checkpoint:
    tc_id: int
    new_rssp: Lsn


@dataclass(frozen=True, slots=True)
class CheckpointAck:
    tc_id: int
    rssp: Lsn


@dataclass(frozen=True, slots=True)
class RestartBegin:
    """Discard anything above stable_end for this TC, then expect redo."""
    tc_id: int
    stable_end: Lsn


@dataclass(frozen=True, slots=True)
class RestartDone:
    tc_id: int


@dataclass(frozen=True, slots=True)
class RestartAck:
    """DC acknowledgement for restart_begin/restart_done (phase echo)."""
    tc_id: int
    phase: str  # "begin" | "done"


@dataclass(frozen=True, slots=True)
class DcCrashPrompt:
    """Out-of-band prompt after a DC restart so TCs start redo."""
    dc_id: int


ContractMsg = (EndOfStableLog | LowWaterMark | Checkpoint | CheckpointAck |
               RestartBegin | RestartDone | RestartAck | DcCrashPrompt)
Message = ContractMsg | LogicalOp | OpReply


def storage_key(table: str, key: bytes) -> bytes:
    """Map (table, key) into the DC's single ordered key space.

    The 2-byte length prefix keeps each table's keys contiguous and ordered;
    tables occupy disjoint lexicographic regions.
    """
    t = table.encode()
    if len(t) > 0xFFFF:
        raise ValueError("table name too long")
    return len(t).to_bytes(2, "big") + t + key


def storage_key_split(skey: bytes) -> tuple[str, bytes]:
    n = int.from_bytes(skey[:2], "big")
    return skey[2:2 + n].decode(), skey[2 + n:]
