"""Seeded random generators for grammars, nets, problem instances and nets with weak tests.

Nets are token-conservative by default so that negative answers can be
checked exhaustively.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Multiset, multisets_upto
from .grammar import Grammar
from .oracle import ProblemInstance
from .petri import PetriNet


@dataclass(frozen=True)
class GrammarShape:
    max_vars: int = 5
    max_productions: int = 12
    terminals: Tuple[str, ...] = ("a", "b")
    eps_rate: float = 0.1
    binary_rate: float = 0.5


def random_restricted_grammar(rng: random.Random, shape: GrammarShape = GrammarShape()) -> Grammar:
    nv = rng.randint(1, shape.max_vars)
    vs = [f"X{i}" for i in range(nv)]
    possible = 1 + nv * nv + len(shape.terminals)
    target = min(rng.randint(nv, max(nv, shape.max_productions)), possible)
    rules = []
    # one terminating production per variable keeps most of them productive
    for v in vs:
        if len(rules) >= target:
            break
        rules.append((v, (rng.choice(shape.terminals),)))
    while len(rules) < target:
        head = rng.choice(vs)
        r = rng.random()
        if r < shape.eps_rate:
            body: Tuple[str, ...] = ()
        elif r < shape.eps_rate + shape.binary_rate:
            body = (rng.choice(vs), rng.choice(vs))
        else:
            body = (rng.choice(shape.terminals),)
        if (head, body) not in rules:
            rules.append((head, body))
    return Grammar.from_rules(rules, terminals=shape.terminals, start=vs[0], variables=vs)


def random_layered_net(rng: random.Random, places: int = 3, transitions: int = 3,
                       arity: int = 2) -> PetriNet:
    """Conservative net whose transitions only move tokens to higher-numbered places.

    Every firing raises the sum of place numbers, so runs are finite.
    """
    ps = [f"s{i}" for i in range(places)]
    trans = {}
    for j in range(transitions):
        n = rng.randint(1, arity)
        lo = rng.randrange(places - 1)
        ins = [lo] + [rng.randrange(lo + 1) for _ in range(n - 1)]
        outs = [rng.randrange(max(ins) + 1, places) for _ in range(n)]
        trans[f"t{j}"] = (Multiset([ps[i] for i in ins]), Multiset([ps[i] for i in outs]))
    return PetriNet.build(ps, trans)


def random_conservative_net(rng: random.Random, places: int = 3, transitions: int = 3,
                            arity: int = 2) -> PetriNet:
    ps = [f"s{i}" for i in range(places)]
    trans = {}
    for j in range(transitions):
        n = rng.randint(1, arity)
        trans[f"t{j}"] = (Multiset(rng.choices(ps, k=n)), Multiset(rng.choices(ps, k=n)))
    return PetriNet.build(ps, trans)


def grammar_over(rng: random.Random, net: PetriNet, max_vars: int = 4, max_productions: int = 8) -> Grammar:
    shape = GrammarShape(max_vars, max_productions, tuple(net.transitions), eps_rate=0.05)
    return random_restricted_grammar(rng, shape)


@dataclass(frozen=True)
class TraversalCase:
    """One net and annotated call site, with the marking pairs to test."""
    net: PetriNet
    grammar: Grammar
    variable: str
    level: int
    pairs: Tuple[Tuple[Multiset, Multiset], ...]

    def instance(self, m: Multiset, m_prime: Multiset) -> ProblemInstance:
        return ProblemInstance(self.net.with_init(m), self.grammar, self.variable, self.level + 1, m_prime)


def traversal_case(rng: random.Random, max_level: int = 2, max_tokens: int = 3, max_places: int = 4) -> TraversalCase:
    places = rng.randint(2, max_places)
    net = random_layered_net(rng, places, rng.randint(1, 4))
    g = grammar_over(rng, net)
    level = rng.randint(0, max_level)
    variable = rng.choice(g.variables)
    pairs = []
    for total in range(1, max_tokens + 1):
        same = [m for m in multisets_upto(net.places, total) if m.total() == total]
        pairs.extend((m, m2) for m in same for m2 in same)
    return TraversalCase(net, g, variable, level, tuple(pairs))


@dataclass(frozen=True)
class WeakCase:
    net: PetriNet
    f: Dict[str, int]
    m_final: Multiset


def random_weak_net(rng: random.Random, places: Optional[int] = None, transitions: Optional[int] = None,
                    max_tested: int = 2, tokens: Optional[int] = None) -> WeakCase:
    """Conservative net with zero tests on prefixes of a level order, plus a target marking."""
    d = places or rng.randint(2, 4)
    ps = [f"s{i}" for i in range(d)]
    f = {p: i for i, p in enumerate(ps)}
    n = min(max_tested, d - 1)
    trans = {}
    for j in range(transitions or rng.randint(1, 4)):
        a = rng.randint(1, 2)
        ins = Multiset(rng.choices(ps, k=a))
        outs = Multiset(rng.choices(ps, k=a))
        l = rng.randint(0, n)
        trans[f"t{j}"] = (ins, outs, tuple(ps[:l]))
    total = tokens or rng.randint(1, 3)
    init = Multiset(rng.choices(ps, k=total))
    final = Multiset(rng.choices(ps, k=total))
    return WeakCase(PetriNet.build(ps, trans, init), f, final)


def seeded(seed: int) -> random.Random:
    return random.Random(seed)


def corpus(seed: int, count: int, make, *args, **kw) -> List:
    rng = seeded(seed)
    return [make(rng, *args, **kw) for _ in range(count)]
