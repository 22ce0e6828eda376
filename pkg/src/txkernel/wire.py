"""Canonical byte formats.

Everything that crosses a durability or component boundary has a fixed
big-endian layout:

* abstract LSN: lsn_lw (8B), member count (2B), members ascending (8B each)
* messages: length-prefixed tagged records (4B length, 1 tag byte, body)
* log records (both TC and DC logs): 4B length, 1 kind byte, body

Integers are big-endian throughout; LSN fields are signed 8-byte so read
correlation ids (negative) share the op-id slot.
"""

from __future__ import annotations

import struct

from .types import (AbstractLsn, Checkpoint, CheckpointAck, DcCrashPrompt,
                    EndOfStableLog, LogicalOp, LowWaterMark, OpReply,
                    RestartAck, RestartBegin, RestartDone, F_COMMITTED,
                    F_DIRTY, F_OWN)

_Q = struct.Struct(">q")
_H = struct.Struct(">H")
_I = struct.Struct(">I")


def _bytes_field(b: bytes) -> bytes:
    return _I.pack(len(b)) + b


def _take_bytes(buf: bytes, off: int) -> tuple[bytes, int]:
    n = _I.unpack_from(buf, off)[0]
    off += 4
    return buf[off:off + n], off + n


def _str_field(s: str) -> bytes:
    b = s.encode()
    return _H.pack(len(b)) + b


def _take_str(buf: bytes, off: int) -> tuple[str, int]:
    n = _H.unpack_from(buf, off)[0]
    off += 2
    return buf[off:off + n].decode(), off + n


# ---------------------------------------------------------------------------
# Abstract LSN canonical form
# ---------------------------------------------------------------------------

def encode_ablsn(a: AbstractLsn) -> bytes:
    return _Q.pack(a.lsn_lw) + _H.pack(len(a.lsn_in)) + b"".join(
        _Q.pack(x) for x in a.lsn_in)


def decode_ablsn(buf: bytes, off: int = 0) -> tuple[AbstractLsn, int]:
    lw = _Q.unpack_from(buf, off)[0]
    n = _H.unpack_from(buf, off + 8)[0]
    off += 10
    members = tuple(_Q.unpack_from(buf, off + 8 * i)[0] for i in range(n))
    return AbstractLsn(lw, members), off + 8 * n


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

TAG_OP = 1
TAG_REPLY = 2
TAG_EOSL = 3
TAG_LWM = 4
TAG_CHECKPOINT = 5
TAG_CHECKPOINT_ACK = 6
TAG_RESTART_BEGIN = 7
TAG_RESTART_DONE = 8
TAG_RESTART_ACK = 9
TAG_DC_CRASH_PROMPT = 10

_KINDS = ["insert", "update", "delete", "read", "range_read",
          "commit_versions", "abort_versions"]
_KIND_CODE = {k: i for i, k in enumerate(_KINDS)}
_FLAVORS = [F_COMMITTED, F_OWN, F_DIRTY]
_FLAVOR_CODE = {f: i for i, f in enumerate(_FLAVORS)}


def encode_logical_op(op: LogicalOp) -> bytes:
    flags = ((op.key is not None) | ((op.key_high is not None) << 1) |
             ((op.payload is not None) << 2) | (op.versioned << 3) |
             ((op.reader_txn is not None) << 4))
    out = [_Q.pack(op.tc_id), _Q.pack(op.lsn), _str_field(op.table),
           bytes([_KIND_CODE[op.kind], flags, _FLAVOR_CODE[op.read_flavor]])]
    if op.key is not None:
        out.append(_bytes_field(op.key))
    if op.key_high is not None:
        out.append(_bytes_field(op.key_high))
    if op.payload is not None:
        out.append(_bytes_field(op.payload))
    if op.reader_txn is not None:
        out.append(_Q.pack(op.reader_txn))
    return b"".join(out)


def decode_logical_op(buf: bytes, off: int = 0) -> tuple[LogicalOp, int]:
    tc_id, lsn = _Q.unpack_from(buf, off)[0], _Q.unpack_from(buf, off + 8)[0]
    table, off = _take_str(buf, off + 16)
    kind, flags, flavor = buf[off], buf[off + 1], buf[off + 2]
    off += 3
    key = key_high = payload = None
    reader_txn = None
    if flags & 1:
        key, off = _take_bytes(buf, off)
    if flags & 2:
        key_high, off = _take_bytes(buf, off)
    if flags & 4:
        payload, off = _take_bytes(buf, off)
    if flags & 16:
        reader_txn = _Q.unpack_from(buf, off)[0]
        off += 8
    op = LogicalOp(tc_id, lsn, table, _KINDS[kind], key=key, key_high=key_high,
                   payload=payload, versioned=bool(flags & 8),
                   read_flavor=_FLAVORS[flavor], reader_txn=reader_txn)
    return op, off


def encode_reply(r: OpReply) -> bytes:
    flags = (r.value is not None) | ((r.values is not None) << 1)
    out = [_Q.pack(r.tc_id), _Q.pack(r.lsn), _str_field(r.status), bytes([flags])]
    if r.value is not None:
        out.append(_bytes_field(r.value))
    if r.values is not None:
        out.append(_I.pack(len(r.values)))
        for k, v in r.values:
            out.append(_bytes_field(k))
            out.append(_bytes_field(v))
    return b"".join(out)


def decode_reply(buf: bytes, off: int = 0) -> tuple[OpReply, int]:
    tc_id, lsn = _Q.unpack_from(buf, off)[0], _Q.unpack_from(buf, off + 8)[0]
    status, off = _take_str(buf, off + 16)
    flags = buf[off]
    off += 1
    value = values = None
    if flags & 1:
        value, off = _take_bytes(buf, off)
    if flags & 2:
        n = _I.unpack_from(buf, off)[0]
        off += 4
        pairs = []
        for _ in range(n):
            k, off = _take_bytes(buf, off)
            v, off = _take_bytes(buf, off)
            pairs.append((k, v))
        values = tuple(pairs)
    return OpReply(tc_id, lsn, status, value, values), off


def encode_message(msg) -> bytes:
    """Length-prefixed tagged encoding of any TC<->DC message."""
    if isinstance(msg, LogicalOp):
        tag, body = TAG_OP, encode_logical_op(msg)
    elif isinstance(msg, OpReply):
        tag, body = TAG_REPLY, encode_reply(msg)
    elif isinstance(msg, EndOfStableLog):
        tag, body = TAG_EOSL, _Q.pack(msg.tc_id) + _Q.pack(msg.eosl)
    elif isinstance(msg, LowWaterMark):
        tag, body = TAG_LWM, _Q.pack(msg.tc_id) + _Q.pack(msg.lwm)
    elif isinstance(msg, Checkpoint):
        tag, body = TAG_CHECKPOINT, _Q.pack(msg.tc_id) + _Q.pack(msg.new_rssp)
    elif isinstance(msg, CheckpointAck):
        tag, body = TAG_CHECKPOINT_ACK, _Q.pack(msg.tc_id) + _Q.pack(msg.rssp)
    elif isinstance(msg, RestartBegin):
        tag, body = TAG_RESTART_BEGIN, _Q.pack(msg.tc_id) + _Q.pack(msg.stable_end)
    elif isinstance(msg, RestartDone):
        tag, body = TAG_RESTART_DONE, _Q.pack(msg.tc_id)
    elif isinstance(msg, RestartAck):
        tag, body = TAG_RESTART_ACK, _Q.pack(msg.tc_id) + _str_field(msg.phase)
    elif isinstance(msg, DcCrashPrompt):
        tag, body = TAG_DC_CRASH_PROMPT, _Q.pack(msg.dc_id)
    else:
        raise TypeError(f"not a wire message: {msg!r}")
    return _I.pack(1 + len(body)) + bytes([tag]) + body


def decode_message(buf: bytes, off: int = 0):
    n = _I.unpack_from(buf, off)[0]
    off += 4
    tag, body = buf[off], buf[off + 1:off + n]
    end = off + n
    if tag == TAG_OP:
        return decode_logical_op(body)[0], end
    if tag == TAG_REPLY:
        return decode_reply(body)[0], end
    a = _Q.unpack_from(body, 0)[0]
    if tag == TAG_EOSL:
        return EndOfStableLog(a, _Q.unpack_from(body, 8)[0]), end
    if tag == TAG_LWM:
        return LowWaterMark(a, _Q.unpack_from(body, 8)[0]), end
    if tag == TAG_CHECKPOINT:
        return Checkpoint(a, _Q.unpack_from(body, 8)[0]), end
    if tag == TAG_CHECKPOINT_ACK:
        return CheckpointAck(a, _Q.unpack_from(body, 8)[0]), end
    if tag == TAG_RESTART_BEGIN:
        return RestartBegin(a, _Q.unpack_from(body, 8)[0]), end
    if tag == TAG_RESTART_DONE:
        return RestartDone(a), end
    if tag == TAG_RESTART_ACK:
        return RestartAck(a, _take_str(body, 8)[0]), end
    if tag == TAG_DC_CRASH_PROMPT:
        return DcCrashPrompt(a), end
    raise ValueError(f"unknown message tag {tag}")


# ---------------------------------------------------------------------------
# Log record framing (shared by the TC log and the DC log)
# ---------------------------------------------------------------------------

def frame_record(kind: int, body: bytes) -> bytes:
    return _I.pack(1 + len(body)) + bytes([kind]) + body


def unframe_record(buf: bytes, off: int = 0) -> tuple[int, bytes, int]:
    n = _I.unpack_from(buf, off)[0]
    off += 4
    return buf[off], buf[off + 1:off + n], off + n
