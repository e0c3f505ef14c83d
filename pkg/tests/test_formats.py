import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfltrace.experiments import roundtrip_suite
from cfltrace.formats import (InvariantViolation, ParseError, dump_grammar, dump_net, dump_program,
                              load_grammar, load_levels, load_net, load_program, parse_model)
from cfltrace.gen import GrammarShape, random_restricted_grammar, random_weak_net

from conftest import CORPUS


def test_corpus_roundtrips_bit_exactly():
    t = roundtrip_suite(CORPUS)
    assert t.failed == 0 and t.passed >= 60, t.failures


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        load_net("place p\ntrans t in {p:1} out\n", "x.pn")
    assert e.value.line == 2
    assert str(e.value).startswith("x.pn:2:")


def test_comment_needs_whitespace():
    net = load_net("place p  # a comment\ntrans t#a in {p:1} out {}\n")
    assert net.transitions == ("t#a",)


@pytest.mark.parametrize("text,line", [
    ("counters x\n  l1: halt\n", 2),
    ("counters x\nsub main level 0:\n  l1 halt\n", 3),
    ("counters x\nsub main level 0:\n  l1: x := y + 1\n  l2: halt\n", 3),
])
def test_program_errors_located(text, line):
    with pytest.raises(ParseError) as e:
        load_program(text)
    assert e.value.line == line


def test_levels_must_be_naturals():
    with pytest.raises(InvariantViolation):
        load_levels('{"p": -1}')


def test_parse_model_by_suffix():
    assert parse_model(str(CORPUS / "instances" / "two_step.pn")).places == ("p", "q", "r")
    assert parse_model(str(CORPUS / "instances" / "two_step.cfg")).start == "X"


@given(st.integers(0, 100_000))
def test_random_net_roundtrip(seed):
    net = random_weak_net(random.Random(seed)).net
    text = dump_net(net)
    assert load_net(text) == net
    assert dump_net(load_net(text)) == text


@given(st.integers(0, 100_000))
def test_random_grammar_roundtrip(seed):
    g = random_restricted_grammar(random.Random(seed), GrammarShape())
    text = dump_grammar(g)
    assert load_grammar(text) == g
    assert dump_grammar(load_grammar(text)) == text


def test_program_corpus_roundtrip_objects():
    for path in sorted((CORPUS / "programs").glob("*.np")):
        p = load_program(path.read_text())
        assert load_program(dump_program(p)) == p
