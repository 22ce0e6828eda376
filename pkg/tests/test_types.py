"""Logical operations, inverses, and the rollback identity."""

import itertools

import pytest

from txkernel.types import (DELETE, INSERT, UPDATE, LogicalOp, inverse_of,
                            storage_key, storage_key_split)


def op(kind, key, payload=None, lsn=1):
    return LogicalOp(1, lsn, "t", kind, key=key, payload=payload)


def test_inverse_examples():
    inv = inverse_of(op(INSERT, b"k1", b"a"), None, fresh_lsn=9)
    assert (inv.kind, inv.key, inv.lsn) == (DELETE, b"k1", 9)

    inv = inverse_of(op(UPDATE, b"k1", b"b"), b"a", fresh_lsn=9)
    assert (inv.kind, inv.payload) == (UPDATE, b"a")

    inv = inverse_of(op(DELETE, b"k1"), b"a", fresh_lsn=9)
    assert (inv.kind, inv.payload) == (INSERT, b"a")


def test_inverse_requires_before_image():
    with pytest.raises(ValueError):
        inverse_of(op(DELETE, b"k1"), None, fresh_lsn=2)
    with pytest.raises(ValueError):
        inverse_of(op(UPDATE, b"k1", b"x"), None, fresh_lsn=2)


def test_double_inverse_restores_original_effect():
    o = op(UPDATE, b"k", b"new")
    inv = inverse_of(o, b"old", fresh_lsn=2)
    back = inverse_of(inv, b"new", fresh_lsn=3)
    assert (back.kind, back.key, back.payload) == (UPDATE, b"k", b"new")

    o = op(INSERT, b"k", b"v")
    inv = inverse_of(o, None, fresh_lsn=2)      # delete
    back = inverse_of(inv, b"v", fresh_lsn=3)   # insert(v)
    assert (back.kind, back.payload) == (INSERT, b"v")


def _apply(state: dict, o: LogicalOp):
    if o.kind == INSERT:
        if o.key in state:
            return state, False
        return {**state, o.key: o.payload}, True
    if o.kind == UPDATE:
        if o.key not in state:
            return state, False
        return {**state, o.key: o.payload}, True
    if o.kind == DELETE:
        if o.key not in state:
            return state, False
        s = dict(state)
        del s[o.key]
        return s, True
    raise AssertionError


def test_op_then_inverse_is_identity_exhaustive():
    keys = [b"a", b"b"]
    vals = [b"0", b"1"]
    states = []
    for va in [None, *vals]:
        for vb in [None, *vals]:
            s = {}
            if va is not None:
                s[b"a"] = va
            if vb is not None:
                s[b"b"] = vb
            states.append(s)
    ops = ([op(INSERT, k, v) for k, v in itertools.product(keys, vals)] +
           [op(UPDATE, k, v) for k, v in itertools.product(keys, vals)] +
           [op(DELETE, k) for k in keys])
    for state in states:
        for o in ops:
            after, applied = _apply(state, o)
            if not applied:
                continue
            before = state.get(o.key)
            inv = inverse_of(o, before, fresh_lsn=99)
            restored, ok = _apply(after, inv)
            assert ok and restored == state


def test_op_validation():
    with pytest.raises(ValueError):
        LogicalOp(1, 1, "t", INSERT, key=b"k")  # payload required
    with pytest.raises(ValueError):
        LogicalOp(1, 1, "t", DELETE, key=b"k", payload=b"x")
    with pytest.raises(ValueError):
        LogicalOp(1, -1, "t", INSERT, key=b"k", payload=b"x")  # write lsn > 0
    with pytest.raises(ValueError):
        LogicalOp(1, 1, "t", "read", key=b"k")  # reads use negative ids


def test_storage_key_roundtrip_and_order():
    assert storage_key_split(storage_key("tbl", b"k1")) == ("tbl", b"k1")
    # keys of one table stay contiguous and ordered
    ks = [storage_key("t", bytes([i])) for i in range(5)]
    assert ks == sorted(ks)
    assert storage_key("a", b"\xff") < storage_key("ab", b"\x00")
