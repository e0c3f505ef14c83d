"""Petri nets with inhibitor arcs and a bounded explicit-state reachability engine."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import EMPTY, Multiset, SearchBudget, Verdict, Word, mdiff, mleq, msum

logger = logging.getLogger(__name__)

IndexFunction = Dict[str, int]


class UnknownTransition(KeyError):
    pass


class NetError(ValueError):
    pass


@dataclass(frozen=True, eq=True)
class PetriNet:
    places: Tuple[str, ...]
    transitions: Tuple[str, ...]
    zero: Mapping[str, FrozenSet[str]]
    inputs: Mapping[str, Multiset]
    outputs: Mapping[str, Multiset]
    init: Multiset = EMPTY

    __hash__ = None  # mappings inside; nets are compared, never hashed

    def __post_init__(self):
        places = set(self.places)
        if len(places) != len(self.places):
            raise NetError("duplicate place")
        if len(set(self.transitions)) != len(self.transitions):
            raise NetError("duplicate transition")
        if places & set(self.transitions):
            raise NetError("places and transitions must be disjoint")
        for t in self.transitions:
            for part, what in ((self.zero.get(t, frozenset()), "zero"),
                               (self.inputs.get(t, EMPTY).support(), "in"),
                               (self.outputs.get(t, EMPTY).support(), "out")):
                extra = set(part) - places
                if extra:
                    raise NetError(f"{what}({t}) mentions unknown places {sorted(extra)}")
        extra = self.init.support() - places
        if extra:
            raise NetError(f"initial marking mentions unknown places {sorted(extra)}")

    @classmethod
    def build(cls, places: Sequence[str], transitions: Mapping[str, tuple], init=EMPTY) -> "PetriNet":
        """``transitions`` maps a name to ``(I, O)`` or ``(I, O, Z)``."""
        zero, ins, outs = {}, {}, {}
        for t, spec in transitions.items():
            i, o = spec[0], spec[1]
            z = spec[2] if len(spec) > 2 else ()
            ins[t] = i if isinstance(i, Multiset) else Multiset(i)
            outs[t] = o if isinstance(o, Multiset) else Multiset(o)
            zero[t] = frozenset(z)
        if not isinstance(init, Multiset):
            init = Multiset(init)
        return cls(tuple(places), tuple(transitions), zero, ins, outs, init)

    def Z(self, t: str) -> FrozenSet[str]:
        return self.zero.get(t, frozenset())

    def I(self, t: str) -> Multiset:
        return self.inputs.get(t, EMPTY)

    def O(self, t: str) -> Multiset:
        return self.outputs.get(t, EMPTY)

    @property
    def is_plain(self) -> bool:
        return all(not self.Z(t) for t in self.transitions)

    def with_init(self, m: Multiset) -> "PetriNet":
        return PetriNet(self.places, self.transitions, self.zero, self.inputs, self.outputs, m)

    def erase_tests(self) -> "PetriNet":
        return PetriNet(self.places, self.transitions, {t: frozenset() for t in self.transitions},
                        self.inputs, self.outputs, self.init)

    def effect(self, t: str) -> int:
        return self.O(t).total() - self.I(t).total()

    def is_conservative(self) -> bool:
        return all(self.effect(t) == 0 for t in self.transitions)

    def is_non_increasing(self) -> bool:
        return all(self.effect(t) <= 0 for t in self.transitions)


def _check(net: PetriNet, t: str) -> None:
    if t not in net.inputs and t not in net.transitions:
        raise UnknownTransition(t)


def enabled(net: PetriNet, m: Multiset, t: str) -> bool:
    _check(net, t)
    return mleq(net.I(t), m) and all(m[p] == 0 for p in net.Z(t))


def fire(net: PetriNet, m: Multiset, t: str) -> Optional[Multiset]:
    if not enabled(net, m, t):
        return None
    return msum(mdiff(m, net.I(t)), net.O(t))


def fire_word(net: PetriNet, m: Multiset, w: Iterable[str]) -> Optional[Multiset]:
    for t in w:
        m = fire(net, m, t)
        if m is None:
            return None
    return m


def is_weak(net: PetriNet, f: Mapping[str, int]) -> Tuple[bool, List[Tuple[str, str, str]]]:
    """Check the weak-inhibitor ordering; returns the failing ``(p, p', t)`` triples."""
    missing = [p for p in net.places if p not in f]
    if missing:
        raise NetError(f"index function undefined on {missing}")
    bad = []
    for t in net.transitions:
        tested = net.Z(t)
        if not tested:
            continue
        for p2 in net.places:
            if p2 not in tested:
                continue
            for p in net.places:
                if f[p] <= f[p2] and p not in tested:
                    bad.append((p, p2, t))
    return (not bad, bad)


def infer_index_function(net: PetriNet) -> Optional[IndexFunction]:
    """An index function making ``net`` weak, or None when the tests do not form a chain."""
    tests = {p: frozenset(t for t in net.transitions if p in net.Z(t)) for p in net.places}
    distinct = sorted(set(tests.values()), key=len, reverse=True)
    for a, b in zip(distinct, distinct[1:]):
        if not b <= a:
            return None
    rank = {s: i for i, s in enumerate(distinct)}
    return {p: rank[tests[p]] for p in net.places}


@dataclass
class ReachResult:
    verdict: Verdict
    witness: Optional[Word] = None
    states_explored: int = 0
    pruned: int = 0
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def reached(self) -> bool:
        return self.verdict is Verdict.REACHED

    @property
    def conclusive(self) -> bool:
        return self.verdict is not Verdict.BUDGET_EXCEEDED

    def as_bool(self) -> Optional[bool]:
        return None if not self.conclusive else self.reached


class VectorNet:
    """Index-based view of a net used by the search loops."""

    def __init__(self, net: PetriNet):
        self.net = net
        self.index = {p: i for i, p in enumerate(net.places)}
        self.trans = []
        for t in net.transitions:
            pre = tuple((self.index[p], n) for p, n in net.I(t).items())
            delta = {}
            for p, n in net.I(t).items():
                delta[self.index[p]] = delta.get(self.index[p], 0) - n
            for p, n in net.O(t).items():
                delta[self.index[p]] = delta.get(self.index[p], 0) + n
            zero = tuple(self.index[p] for p in net.Z(t))
            self.trans.append((t, pre, tuple((i, d) for i, d in delta.items() if d), zero,
                               net.effect(t)))

    def vec(self, m: Multiset) -> Tuple[int, ...]:
        extra = m.support() - set(self.index)
        if extra:
            raise NetError(f"marking mentions unknown places {sorted(extra)}")
        v = [0] * len(self.index)
        for p, n in m.items():
            v[self.index[p]] = n
        return tuple(v)

    def multiset(self, v: Sequence[int]) -> Multiset:
        return Multiset({p: v[i] for p, i in self.index.items() if v[i]})

    def successors(self, v: Tuple[int, ...]):
        for t, pre, delta, zero, eff in self.trans:
            ok = True
            for i, n in pre:
                if v[i] < n:
                    ok = False
                    break
            if not ok:
                continue
            for i in zero:
                if v[i]:
                    ok = False
                    break
            if not ok:
                continue
            w = list(v)
            for i, d in delta:
                w[i] += d
            yield t, tuple(w), eff


def bounded_reach(net: PetriNet, target: Multiset, budget: SearchBudget,
                  start: Optional[Multiset] = None) -> ReachResult:
    """Breadth-first search for ``target`` from the initial marking.

    States whose token sum exceeds ``budget.tokens`` are pruned.  A negative
    answer is ``ExhaustedNo`` only when nothing was pruned and the frontier
    emptied; otherwise ``BudgetExceeded``.
    """
    vn = VectorNet(net)
    src = vn.vec(net.init if start is None else start)
    goal = vn.vec(target)
    if src == goal:
        return ReachResult(Verdict.REACHED, (), 1)
    if sum(src) > budget.tokens:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, 0, 1, "initial marking over token cap")
    parent: Dict[tuple, Optional[tuple]] = {src: None}
    frontier = deque([src])
    pruned = 0
    explored = 0
    while frontier:
        v = frontier.popleft()
        explored += 1
        if explored > budget.steps:
            return ReachResult(Verdict.BUDGET_EXCEEDED, None, explored - 1, pruned, "state cap")
        total = sum(v)
        for t, w, eff in vn.successors(v):
            if w in parent:
                continue
            if total + eff > budget.tokens:
                pruned += 1
                continue
            parent[w] = (v, t)
            if w == goal:
                return ReachResult(Verdict.REACHED, _unwind(parent, w), explored, pruned)
            frontier.append(w)
    if pruned:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, explored, pruned, "token cap")
    return ReachResult(Verdict.EXHAUSTED_NO, None, explored, 0)


def _unwind(parent, w) -> Word:
    word = []
    while parent[w] is not None:
        w, t = parent[w]
        word.append(t)
    return tuple(reversed(word))


def reachable_markings(net: PetriNet, budget: SearchBudget,
                       start: Optional[Multiset] = None) -> Tuple[List[Multiset], bool]:
    """All markings reachable within the caps, and whether the exploration was exhaustive."""
    vn = VectorNet(net)
    src = vn.vec(net.init if start is None else start)
    seen = {src}
    frontier = deque([src])
    exact = sum(src) <= budget.tokens
    while frontier:
        v = frontier.popleft()
        if len(seen) > budget.steps:
            exact = False
            break
        total = sum(v)
        for _, w, eff in vn.successors(v):
            if w in seen:
                continue
            if total + eff > budget.tokens:
                exact = False
                continue
            seen.add(w)
            frontier.append(w)
    return [vn.multiset(v) for v in seen], exact


def max_run_length(net: PetriNet, start: Multiset, budget: SearchBudget) -> Optional[int]:
    """Length of the longest firing sequence from ``start``.

    None when the reachable graph is not exhaustively explorable within the
    caps or contains a cycle (runs are then unbounded).
    """
    vn = VectorNet(net)
    src = vn.vec(start)
    succ: Dict[tuple, List[tuple]] = {}
    stack = [src]
    while stack:
        v = stack.pop()
        if v in succ:
            continue
        if len(succ) > budget.steps or sum(v) > budget.tokens:
            return None
        nxt = [w for _, w, _ in vn.successors(v)]
        succ[v] = nxt
        stack.extend(w for w in nxt if w not in succ)
    # longest path on a DAG; a back edge means unbounded runs
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {v: WHITE for v in succ}
    longest: Dict[tuple, int] = {}
    for root in succ:
        if colour[root] != WHITE:
            continue
        work = [(root, iter(succ[root]))]
        colour[root] = GREY
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if colour[w] == GREY:
                    return None
                if colour[w] == WHITE:
                    colour[w] = GREY
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
            if not advanced:
                work.pop()
                colour[v] = BLACK
                longest[v] = max((longest[w] + 1 for w in succ[v]), default=0)
    return longest[src]
