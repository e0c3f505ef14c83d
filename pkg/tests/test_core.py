import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfltrace.core import (EMPTY, Multiset, NotSubsumed, SearchBudget, format_multiset,
                           multisets_upto, parse_multiset, project, sub_multisets, word_str)

from conftest import multisets


def test_zero_counts_are_dropped():
    assert Multiset({"p": 0, "q": 2}) == Multiset({"q": 2})
    assert Multiset({"p": 0}) == EMPTY
    assert not EMPTY


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        Multiset({"p": -1})


def test_of_counts_repeats():
    assert Multiset.of("p", "p", "q") == Multiset({"p": 2, "q": 1})


def test_difference_requires_inclusion():
    with pytest.raises(NotSubsumed):
        Multiset.of("p") - Multiset.of("q")


def test_parse_bare_and_named_entries():
    assert parse_multiset("{p, q:2, p}") == Multiset({"p": 2, "q": 2})
    assert parse_multiset("{}") == EMPTY
    assert parse_multiset("{@l1:1, ret@l0}") == Multiset({"@l1": 1, "ret@l0": 1})
    assert parse_multiset("{Mi.0.p:3}")["Mi.0.p"] == 3


@pytest.mark.parametrize("bad", ["p:1", "{p:x}", "{p q}", "{:2}"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_multiset(bad)


def test_word_str():
    assert word_str(None) == "-"
    assert word_str(()) == "eps"
    assert word_str(("a", "b")) == "a b"


def test_project_keeps_order():
    assert project(("a", "x", "b", "a"), {"a", "b"}) == ("a", "b", "a")


def test_multisets_upto_count():
    # compositions of n into 3 parts, summed over n = 0..3: 1+3+6+10
    assert sum(1 for _ in multisets_upto("pqr", 3)) == 20


def test_budget_replace():
    b = SearchBudget().replace(tokens=3)
    assert b.tokens == 3 and b.steps == SearchBudget().steps


@given(multisets())
def test_format_parse_roundtrip(m):
    assert parse_multiset(format_multiset(m)) == m


@given(multisets(), multisets())
def test_sum_then_diff(a, b):
    assert (a + b) - b == a
    assert a <= a + b
    assert (a + b).total() == a.total() + b.total()


@given(multisets(), multisets())
def test_order_matches_pointwise(a, b):
    assert (a <= b) == all(a[s] <= b[s] for s in "pqrs")


@given(multisets(max_count=2))
def test_sub_multisets_exactly_the_lower_set(m):
    subs = list(sub_multisets(m))
    assert len(subs) == len(set(subs))
    expected = 1
    for _, n in m.items():
        expected *= n + 1
    assert len(subs) == expected
    assert all(q <= m for q in subs)
    totals = [q.total() for q in subs]
    assert totals == sorted(totals)


@given(st.integers(0, 4))
def test_multisets_upto_ordered_and_distinct(cap):
    ms = list(multisets_upto("pq", cap))
    assert len(ms) == len(set(ms)) == (cap + 1) * (cap + 2) // 2
    assert [m.total() for m in ms] == sorted(m.total() for m in ms)
