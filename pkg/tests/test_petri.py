import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfltrace.core import Multiset, SearchBudget, Verdict
from cfltrace.gen import random_layered_net, random_weak_net
from cfltrace.petri import (NetError, PetriNet, UnknownTransition, bounded_reach, enabled, fire,
                            fire_word, infer_index_function, is_weak, max_run_length,
                            reachable_markings)

import random


def ring():
    return PetriNet.build(["p", "q"], {"t": ({"p": 1}, {"q": 1}), "u": ({"q": 1}, {"p": 1}, ["p"])},
                          {"p": 2})


def test_inhibitor_blocks_until_empty():
    net = ring()
    m = Multiset({"p": 1, "q": 1})
    assert not enabled(net, m, "u")
    assert fire(net, Multiset({"q": 2}), "u") == Multiset({"p": 1, "q": 1})


def test_fire_word_stops_on_disabled():
    net = ring()
    assert fire_word(net, net.init, ["t", "t"]) == Multiset({"q": 2})
    assert fire_word(net, net.init, ["t", "u"]) is None


def test_unknown_transition():
    with pytest.raises(UnknownTransition):
        fire(ring(), Multiset(), "zz")


def test_build_validates_places():
    with pytest.raises(NetError):
        PetriNet.build(["p"], {"t": ({"x": 1}, {})})
    with pytest.raises(NetError):
        PetriNet.build(["p", "p"], {})


def test_reach_with_witness():
    net = ring()
    res = bounded_reach(net, Multiset({"p": 2}), SearchBudget())
    assert res.reached and res.witness == ()
    res = bounded_reach(net, Multiset({"q": 2}), SearchBudget())
    assert res.reached and fire_word(net, net.init, res.witness) == Multiset({"q": 2})


def test_token_cap_downgrades_negative():
    gen = PetriNet.build(["p"], {"t": ({}, {"p": 1})})
    res = bounded_reach(gen, Multiset(), SearchBudget(tokens=3))
    assert res.reached  # empty target equals the empty initial marking
    grow = PetriNet.build(["p", "q"], {"t": ({}, {"p": 1})})
    res = bounded_reach(grow, Multiset({"q": 1}), SearchBudget(tokens=3))
    assert res.verdict is Verdict.BUDGET_EXCEEDED and res.reason == "token cap"


def test_exhausted_no():
    res = bounded_reach(ring(), Multiset({"p": 3}), SearchBudget())
    assert res.verdict is Verdict.EXHAUSTED_NO


def test_max_run_length_frozen():
    # two tokens each moved once from p to q; the test on p blocks the way back
    net = PetriNet.build(["p", "q"], {"t": ({"p": 1}, {"q": 1})}, {"p": 2})
    assert max_run_length(net, net.init, SearchBudget()) == 2
    assert max_run_length(ring(), ring().init, SearchBudget()) is None


def test_weak_check_reports_violation():
    net = PetriNet.build(["a", "b"], {"t": ({}, {}, ["b"])})
    ok, bad = is_weak(net, {"a": 0, "b": 1})
    assert not ok and bad == [("a", "b", "t")]
    assert is_weak(net, {"a": 1, "b": 0})[0]


def test_infer_index_function_chain_and_non_chain():
    chain = PetriNet.build(["a", "b", "c"], {"t": ({}, {}, ["a"]), "u": ({}, {}, ["a", "b"])})
    f = infer_index_function(chain)
    assert is_weak(chain, f)[0]
    cross = PetriNet.build(["a", "b"], {"t": ({}, {}, ["a"]), "u": ({}, {}, ["b"])})
    assert infer_index_function(cross) is None


@given(st.integers(0, 10_000))
def test_reach_agrees_with_reachable_set(seed):
    rng = random.Random(seed)
    case = random_weak_net(rng)
    ms, exact = reachable_markings(case.net, SearchBudget())
    assert exact  # conservative nets with small totals
    res = bounded_reach(case.net, case.m_final, SearchBudget())
    assert res.reached == (case.m_final in ms)
    if res.reached:
        assert fire_word(case.net, case.net.init, res.witness) == case.m_final


@given(st.integers(0, 10_000))
def test_layered_nets_terminate(seed):
    rng = random.Random(seed)
    net = random_layered_net(rng, 3, 3).with_init(Multiset({"s0": 2}))
    n = max_run_length(net, net.init, SearchBudget())
    assert n is not None
    assert net.is_conservative()
