import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfltrace.core import Multiset, SearchBudget, Verdict
from cfltrace.formats import load_levels, load_net, read
from cfltrace.gen import random_weak_net
from cfltrace.grammar import enum_language, find_preimage
from cfltrace.netprog import NotWeak
from cfltrace.oracle import words_along
from cfltrace.petri import PetriNet, bounded_reach, fire_word
from cfltrace.reduce_bwd import (backward_artifact, backward_decide, build_nprime, build_trace_grammar,
                                 build_words, index_claim_holds, normalize_pnw, shadow_sums,
                                 tower_member, trace_words, tower_variable)

from conftest import CORPUS

B = SearchBudget()


def load(name):
    d = CORPUS / "pnw"
    return load_net(read(str(d / f"{name}.pn"))), load_levels(read(str(d / f"{name}.json")))


def test_normal_net_kept_as_is():
    net, f = load("one_test")
    np = normalize_pnw(net, f, Multiset())
    assert not np.gadget and np.n == 1 and np.net is net
    wp = build_nprime(np)
    assert trace_words(np, wp) == {0: [], 1: [("t1",)]}


def test_gadget_frozen():
    net, f = load("blocked")
    np = normalize_pnw(net, f, Multiset())
    assert np.gadget and np.order == ("s1", "start", "run", "s2")
    wp = build_nprime(np)
    # t_init puts the start token on the tested place, so its word drains one shadow token first
    assert trace_words(np, wp) == {0: [("c1", "t_init"), ("t_fin",)], 1: [("t1",)]}
    g, start, index = build_trace_grammar(np, wp)
    assert (start, index) == ("A1", 2)


@pytest.mark.parametrize("name,verdict", [("one_test", Verdict.REACHED), ("blocked", Verdict.EXHAUSTED_NO)])
def test_decisions_frozen(name, verdict):
    net, f = load(name)
    res, _ = backward_decide(net, f, Multiset(), B)
    assert res.verdict is verdict


def test_rejects_non_weak():
    net = PetriNet.build(["a", "b"], {"t": ({}, {}, ["b"])})
    with pytest.raises(NotWeak):
        normalize_pnw(net, {"a": 0, "b": 1}, Multiset())


def test_split_transition_halves():
    net = PetriNet.build(["a", "b"], {"t": ({"b": 1}, {"a": 1}, ["a"])}, {"b": 1})
    np = normalize_pnw(net, {"a": 0, "b": 1}, Multiset({"a": 1}))
    assert "t#a" in np.net.transitions and "t#b" in np.net.transitions
    assert np.project_original(("t_init", "t#a", "t#b", "t_fin")) == ("t",)


def test_build_words_balance_shadows():
    net = PetriNet.build(["a", "b"], {"t": ({"a": 2}, {"a": 1, "b": 1}), "z": ({}, {}, ["a"])})
    np = normalize_pnw(net, {"a": 0, "b": 1}, Multiset())
    wp = build_nprime(np)
    u, v = build_words(np, wp, "t")
    assert u == ("p1", "p1") and v == ("c1",)


weak_cases = st.integers(0, 100_000).map(lambda s: random_weak_net(random.Random(s)))


@settings(max_examples=40)
@given(weak_cases)
def test_backward_matches_direct_search(case):
    res, art = backward_decide(case.net, case.f, case.m_final, B)
    direct = bounded_reach(case.net, case.m_final, B)
    assert res.conclusive and direct.conclusive
    assert res.reached == direct.reached
    if res.reached:
        assert fire_word(case.net, case.net.init, res.extra["projected"]) == case.m_final


@settings(max_examples=25)
@given(weak_cases)
def test_grammar_and_definition_agree(case):
    art = backward_artifact(case.net, case.f, case.m_final, B)
    np, wp = art.normalized, art.widget
    letters = wp.net.transitions
    for l in range(np.n + 1):
        words = enum_language(art.grammar, tower_variable(l), 4, None, B)
        for n in range(4):
            for w in product(letters, repeat=n):
                assert tower_member(np, wp, l, w) == (w in words)


@settings(max_examples=25)
@given(weak_cases)
def test_index_claim_on_short_words(case):
    art = backward_artifact(case.net, case.f, case.m_final, B)
    assert index_claim_holds(art, 4, B)


@settings(max_examples=25)
@given(weak_cases)
def test_words_along_matches_enumerate_then_fire(case):
    art = backward_artifact(case.net, case.f, case.m_final, B)
    wp = art.widget
    for l in range(art.normalized.n + 1):
        a = tower_variable(l)
        fired = words_along(wp.net, art.grammar, a, wp.net.init, 5, 2 * art.index + 2, B)
        brute = {w: fire_word(wp.net, wp.net.init, w) for w in enum_language(art.grammar, a, 5, None, B)}
        assert fired == {w: m for w, m in brute.items() if m is not None}


@settings(max_examples=25)
@given(weak_cases)
def test_shadow_sums_conserved(case):
    art = backward_artifact(case.net, case.f, case.m_final, B)
    np, wp = art.normalized, art.widget
    m = wp.net.init + Multiset({r: 1 for r in wp.shadow})
    for l in range(np.n + 1):
        for w, m2 in words_along(wp.net, art.grammar, tower_variable(l), m, 6, 2 * art.index + 2, B).items():
            assert shadow_sums(np, wp, m) == shadow_sums(np, wp, m2)


@settings(max_examples=25)
@given(weak_cases)
def test_every_short_transition_word_has_a_preimage(case):
    art = backward_artifact(case.net, case.f, case.m_final, B)
    np, wp = art.normalized, art.widget
    base = list(wp.base)
    for x in product(base, repeat=2):
        w = find_preimage(art.grammar, art.start, x, base, 10, 2 * art.index + 2, B)
        assert w is not None
        assert tuple(t for t in w if t in base) == x
        assert tower_member(np, wp, np.n, w)
