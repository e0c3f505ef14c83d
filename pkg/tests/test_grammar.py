import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfltrace.core import BudgetExceeded, SearchBudget
from cfltrace.gen import GrammarShape, random_restricted_grammar
from cfltrace.grammar import (AnnotatedVariable, Derivation, Grammar, InvalidDerivation,
                              NotRestricted, annotate, annotated, check_derivation_index,
                              derive_word, enum_language, enum_language_certified, is_empty_language,
                              to_restricted)

from brute import brute_language, dyck

# derived by brute_language over all rewrite positions, frozen
DYCK_BY_INDEX = {1: 1, 2: 5, 3: 23}


@pytest.mark.parametrize("k,count", sorted(DYCK_BY_INDEX.items()))
def test_dyck_index_counts(k, count):
    assert len(enum_language(dyck(), "S", 8, k)) == count


def test_dyck_unbounded_equals_index_three_up_to_eight():
    assert enum_language(dyck(), "S", 8) == enum_language(dyck(), "S", 8, 3)


def test_index_zero_is_empty():
    assert enum_language(dyck(), "S", 8, 0) == set()


def test_restricted_detection():
    assert dyck().restricted
    g = Grammar.from_rules([("S", ("a", "S"))], start="S")
    assert not g.restricted
    with pytest.raises(NotRestricted):
        annotate(g, 1)


def test_annotated_names_roundtrip():
    v = AnnotatedVariable.parse(annotated("X0", 3))
    assert v.name == "X0[3]"


def test_annotate_drops_binary_at_zero():
    gk = annotate(dyck(), 1)
    heads0 = {h for h, b in gk.productions if h.endswith("[0]")}
    assert all(len(b) <= 1 for h, b in gk.productions if h in heads0)
    assert gk.start == "S[1]"


def test_empty_language():
    g = Grammar.from_rules([("S", ("S", "S"))], start="S")
    assert is_empty_language(g, "S")
    assert enum_language(g, "S", 6) == set()


def test_derivation_checker():
    g = dyck()
    d = derive_word(g, "S", ("a", "b"), k=2)
    assert d is not None and d.result == ("a", "b")
    assert check_derivation_index(d, g) <= 2
    bad = Derivation([("S",), ("a",)], [(("S", ("a",)), 0)])
    with pytest.raises(InvalidDerivation):
        check_derivation_index(bad, g)


def test_derive_word_respects_index():
    # abab needs S S with both halves open at some point: index 3
    assert derive_word(dyck(), "S", ("a", "b", "a", "b"), k=2) is None
    assert derive_word(dyck(), "S", ("a", "b", "a", "b"), k=3) is not None


def test_budget_cap_raises_with_partial():
    with pytest.raises(BudgetExceeded) as e:
        enum_language(dyck(), "S", 8, 3, SearchBudget(derivation_steps=2))
    assert e.value.partial is not None


def test_to_restricted_preserves_language():
    g = Grammar.from_rules([("S", ("a", "S", "b")), ("S", ())], start="S")
    r, names = to_restricted(g)
    assert r.restricted
    assert enum_language(r, names["S"], 8) == {("a",) * n + ("b",) * n for n in range(5)}


grammars = st.integers(0, 100_000).map(
    lambda s: random_restricted_grammar(random.Random(s), GrammarShape(max_vars=3, max_productions=7)))


@given(grammars, st.integers(1, 3))
def test_index_enumeration_matches_brute_force(g, k):
    for x in g.variables:
        assert enum_language(g, x, 5, k) == brute_language(g, x, 5, k)


@given(grammars, st.integers(0, 2))
def test_annotation_matches_index(g, k):
    gk = annotate(g, k)
    for x in g.variables:
        assert enum_language(gk, annotated(x, k), 6) == enum_language(g, x, 6, k + 1)


@given(grammars)
def test_index_hierarchy_grows(g):
    for x in g.variables:
        prev = set()
        for k in range(1, 4):
            cur = enum_language(g, x, 5, k)
            assert prev <= cur
            prev = cur
        assert prev <= enum_language(g, x, 5)


@given(grammars)
def test_certified_derivations_replay(g):
    for x in g.variables:
        for w in sorted(enum_language(g, x, 4, 2))[:5]:
            d = derive_word(g, x, w, k=2)
            assert d is not None and d.result == w
            assert check_derivation_index(d, g) <= 2


@given(grammars, st.integers(1, 3))
def test_every_enumerated_word_has_a_certificate(g, k):
    for x in g.variables:
        certs = enum_language_certified(g, x, 5, k)
        assert set(certs) == enum_language(g, x, 5, k)
        for w, d in certs.items():
            assert d.forms[0] == (x,) and d.result == w
            assert check_derivation_index(d, g) <= k
