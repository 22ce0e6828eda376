"""Log record types for the two independent recovery logs.

The TC log carries logical user-operation records (with undo information)
plus transaction outcome and checkpoint records.  The DC log carries only
system-transaction records for structure modifications: a split captures the
split key and a full physical image of the new page (including its abstract
LSNs at split time); a consolidate captures a full physical image of the
survivor.  A system transaction counts only once its commit record is on the
stable log; anything else is undone at recovery.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

from . import wire
from .types import LogicalOp, Lsn

_Q = struct.Struct(">q")
_H = struct.Struct(">H")
_I = struct.Struct(">I")

# TC log record kinds
TC_OP_REDO = 1
TC_COMMIT = 2
TC_ABORT = 3
TC_CHECKPOINT = 4


@dataclass(frozen=True, slots=True)
class OpRedo:
    lsn: Lsn
    txn_id: int
    op: LogicalOp
    before: Optional[bytes] = None      # before image; None for inserts
    inverse_of: Optional[Lsn] = None    # set when this record undoes another


@dataclass(frozen=True, slots=True)
class CommitRec:
    lsn: Lsn
    txn_id: int


@dataclass(frozen=True, slots=True)
class AbortRec:
    lsn: Lsn
    txn_id: int


@dataclass(frozen=True, slots=True)
class CheckpointRec:
    lsn: Lsn
    rssp: Lsn
    active_txns: tuple[int, ...] = ()


TcLogRecord = OpRedo | CommitRec | AbortRec | CheckpointRec


def encode_tc_record(rec: TcLogRecord) -> bytes:
    if isinstance(rec, OpRedo):
        flags = (rec.before is not None) | ((rec.inverse_of is not None) << 1)
        body = [_Q.pack(rec.lsn), _Q.pack(rec.txn_id), bytes([flags])]
        if rec.before is not None:
            body.append(_I.pack(len(rec.before)) + rec.before)
        if rec.inverse_of is not None:
            body.append(_Q.pack(rec.inverse_of))
        body.append(wire.encode_logical_op(rec.op))
        return wire.frame_record(TC_OP_REDO, b"".join(body))
    if isinstance(rec, CommitRec):
        return wire.frame_record(TC_COMMIT, _Q.pack(rec.lsn) + _Q.pack(rec.txn_id))
    if isinstance(rec, AbortRec):
        return wire.frame_record(TC_ABORT, _Q.pack(rec.lsn) + _Q.pack(rec.txn_id))
    if isinstance(rec, CheckpointRec):
        body = [_Q.pack(rec.lsn), _Q.pack(rec.rssp), _H.pack(len(rec.active_txns))]
        body.extend(_Q.pack(t) for t in rec.active_txns)
        return wire.frame_record(TC_CHECKPOINT, b"".join(body))
    raise TypeError(f"not a TC log record: {rec!r}")


def decode_tc_record(buf: bytes, off: int = 0) -> tuple[TcLogRecord, int]:
    kind, body, end = wire.unframe_record(buf, off)
    lsn = _Q.unpack_from(body, 0)[0]
    if kind == TC_OP_REDO:
        txn = _Q.unpack_from(body, 8)[0]
        flags = body[16]
        p = 17
        before = inverse_of = None
        if flags & 1:
            n = _I.unpack_from(body, p)[0]
            before = body[p + 4:p + 4 + n]
            p += 4 + n
        if flags & 2:
            inverse_of = _Q.unpack_from(body, p)[0]
            p += 8
        op, _ = wire.decode_logical_op(body, p)
        return OpRedo(lsn, txn, op, before, inverse_of), end
    if kind == TC_COMMIT:
        return CommitRec(lsn, _Q.unpack_from(body, 8)[0]), end
    if kind == TC_ABORT:
        return AbortRec(lsn, _Q.unpack_from(body, 8)[0]), end
    if kind == TC_CHECKPOINT:
        rssp = _Q.unpack_from(body, 8)[0]
        n = _H.unpack_from(body, 16)[0]
        txns = tuple(_Q.unpack_from(body, 18 + 8 * i)[0] for i in range(n))
        return CheckpointRec(lsn, rssp, txns), end
    raise ValueError(f"unknown TC record kind {kind}")


# DC log record kinds
DC_SPLIT = 1
DC_CONSOLIDATE = 2
DC_SYS_COMMIT = 3


@dataclass(frozen=True, slots=True)
class SplitRec:
    dlsn: int
    old_page_id: int
    split_key: bytes
    new_page_image: bytes  # full physical image, abstract LSNs included


@dataclass(frozen=True, slots=True)
class ConsolidateRec:
    dlsn: int
    freed_page_id: int
    survivor_image: bytes  # full physical image with merged abstract LSNs


@dataclass(frozen=True, slots=True)
class SysCommitRec:
    dlsn: int
    start_dlsn: int


DcLogRecord = SplitRec | ConsolidateRec | SysCommitRec


def encode_dc_record(rec: DcLogRecord) -> bytes:
    if isinstance(rec, SplitRec):
        body = (_Q.pack(rec.dlsn) + _Q.pack(rec.old_page_id) +
                _H.pack(len(rec.split_key)) + rec.split_key +
                _I.pack(len(rec.new_page_image)) + rec.new_page_image)
        return wire.frame_record(DC_SPLIT, body)
    if isinstance(rec, ConsolidateRec):
        body = (_Q.pack(rec.dlsn) + _Q.pack(rec.freed_page_id) +
                _I.pack(len(rec.survivor_image)) + rec.survivor_image)
        return wire.frame_record(DC_CONSOLIDATE, body)
    if isinstance(rec, SysCommitRec):
        return wire.frame_record(DC_SYS_COMMIT,
                                 _Q.pack(rec.dlsn) + _Q.pack(rec.start_dlsn))
    raise TypeError(f"not a DC log record: {rec!r}")


def decode_dc_record(buf: bytes, off: int = 0) -> tuple[DcLogRecord, int]:
    kind, body, end = wire.unframe_record(buf, off)
    dlsn = _Q.unpack_from(body, 0)[0]
    if kind == DC_SPLIT:
        old_id = _Q.unpack_from(body, 8)[0]
        n = _H.unpack_from(body, 16)[0]
        split_key = body[18:18 + n]
        p = 18 + n
        m = _I.unpack_from(body, p)[0]
        image = body[p + 4:p + 4 + m]
        return SplitRec(dlsn, old_id, split_key, image), end
    if kind == DC_CONSOLIDATE:
        freed = _Q.unpack_from(body, 8)[0]
        m = _I.unpack_from(body, 16)[0]
        image = body[20:20 + m]
        return ConsolidateRec(dlsn, freed, image), end
    if kind == DC_SYS_COMMIT:
        return SysCommitRec(dlsn, _Q.unpack_from(body, 8)[0]), end
    raise ValueError(f"unknown DC record kind {kind}")
