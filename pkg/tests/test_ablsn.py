"""Abstract LSN algebra against an independent cover-set oracle."""

import pytest
from hypothesis import given, strategies as st

from txkernel.types import (AbstractLsn, ablsn_advance, ablsn_covers,
                            ablsn_merge, ablsn_record)


def cover_set(a: AbstractLsn, limit: int = 64) -> frozenset:
    # independent oracle: explicit enumeration of the covered LSNs
    return frozenset(x for x in range(1, limit + 1)
                     if x <= a.lsn_lw or x in a.lsn_in)


def ablsns(max_lsn=10, max_in=3):
    def build(lw, extra):
        return AbstractLsn(lw, tuple(sorted({x for x in extra if x > lw})))
    return st.builds(build, st.integers(0, max_lsn),
                     st.frozensets(st.integers(1, max_lsn), max_size=max_in))


def test_covers_examples():
    assert ablsn_covers(7, AbstractLsn(5, (7, 9)))
    assert not ablsn_covers(6, AbstractLsn(5, (7, 9)))
    assert ablsn_covers(5, AbstractLsn(5, ()))


def test_record_examples():
    assert ablsn_record(AbstractLsn(5, ()), 7) == AbstractLsn(5, (7,))
    assert ablsn_record(AbstractLsn(5, (7,)), 9) == AbstractLsn(5, (7, 9))
    with pytest.raises(ValueError):
        ablsn_record(AbstractLsn(5, (7,)), 7)


def test_advance_examples():
    assert ablsn_advance(AbstractLsn(5, (7, 9)), 8) == AbstractLsn(8, (9,))
    assert ablsn_advance(AbstractLsn(5, (7, 9)), 3) == AbstractLsn(5, (7, 9))
    assert ablsn_advance(AbstractLsn(5, (7, 9)), 10) == AbstractLsn(10, ())


def test_merge_examples():
    assert ablsn_merge(AbstractLsn(5, (7,)), AbstractLsn(6, ())) == \
        AbstractLsn(6, (7,))
    assert ablsn_merge(AbstractLsn(5, (7, 9)), AbstractLsn(8, (10,))) == \
        AbstractLsn(8, (9, 10))
    assert ablsn_merge(AbstractLsn(0, ()), AbstractLsn(0, ())) == AbstractLsn(0, ())


def test_invariants_enforced():
    with pytest.raises(ValueError):
        AbstractLsn(5, (4,))
    with pytest.raises(ValueError):
        AbstractLsn(0, (3, 2))


@given(ablsns(), st.integers(1, 10), st.integers(1, 10))
def test_advance_never_forgets(a, op, lwm):
    if ablsn_covers(op, a):
        assert ablsn_covers(op, ablsn_advance(a, lwm))


@given(ablsns(), st.integers(1, 10))
def test_advance_cover_grows(a, lwm):
    assert cover_set(ablsn_advance(a, lwm)) >= cover_set(a)


@given(ablsns(), ablsns())
def test_merge_is_cover_union(a, b):
    m = ablsn_merge(a, b)
    assert cover_set(m) == cover_set(a) | cover_set(b)
    assert ablsn_merge(b, a) == m


@given(ablsns(), ablsns(), ablsns())
def test_merge_associative_on_covers(a, b, c):
    lhs = ablsn_merge(ablsn_merge(a, b), c)
    rhs = ablsn_merge(a, ablsn_merge(b, c))
    assert cover_set(lhs) == cover_set(rhs)


@given(ablsns(), st.integers(1, 10))
def test_record_adds_exactly_one(a, op):
    if ablsn_covers(op, a):
        with pytest.raises(ValueError):
            ablsn_record(a, op)
    else:
        assert cover_set(ablsn_record(a, op)) == cover_set(a) | {op}
