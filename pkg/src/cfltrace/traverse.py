"""Executable traversal procedure over an allowance-annotated grammar.

A proper call on ``X[l]`` with ``Mi[l] = m`` and ``Mf[l] = m'`` succeeds iff some
word of ``L(X[l])`` leads from ``m`` to ``m'``.  Nondeterministic choices
(production, transfer and add quantities) are resolved by a memoised search
over call goals ``(X[l], Mi[l], Mf[l])``: since a proper call only touches
levels up to ``l`` and must leave all of them empty, its outcome depends on
nothing else.  A successful resolution is then replayed step by step on
explicit ``Mi``/``Mf`` arrays to produce the trace and check the asserts.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Multiset, SearchBudget, Verdict
from .grammar import AnnotatedVariable, Grammar
from .petri import PetriNet, VectorNet

Vec = Tuple[int, ...]


class ImproperCall(ValueError):
    pass


@dataclass
class TraverseState:
    Mi: List[Multiset]
    Mf: List[Multiset]
    call: AnnotatedVariable

    def check_proper(self) -> None:
        for j in range(self.call.allowance):
            if self.Mi[j].total() or self.Mf[j].total():
                raise ImproperCall(f"level {j} is not empty at entry of {self.call}")

    def digest(self) -> str:
        text = "|".join(f"{a};{b}" for a, b in zip(self.Mi, self.Mf))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class TraverseResult:
    verdict: Verdict
    trace: List[dict] = field(default_factory=list)
    goals: int = 0
    pruned: int = 0
    reason: str = ""

    @property
    def success(self) -> Optional[bool]:
        if self.verdict is Verdict.BUDGET_EXCEEDED:
            return None
        return self.verdict is Verdict.REACHED

    def trace_json(self) -> str:
        return json.dumps(self.trace, indent=1)


def _sub_vectors(v: Vec):
    out = list(itertools.product(*(range(n + 1) for n in v)))
    out.sort(key=lambda q: (sum(q), q))
    return out


def _minus(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def _plus(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def _leq(a: Vec, b: Vec) -> bool:
    return all(x <= y for x, y in zip(a, b))


class _Solver:
    def __init__(self, net: PetriNet, gk: Grammar, budget: SearchBudget):
        self.vn = VectorNet(net)
        self.tindex = {t: (pre, delta) for t, pre, delta, _, _ in self.vn.trans}
        self.cap = budget.tokens
        self.max_goals = budget.steps
        self.heads = gk.by_head()
        self.ts = set(gk.terminals)
        self.goals: Dict[tuple, Optional[tuple]] = {}
        self.reach_cache: Dict[Vec, List[Vec]] = {}
        self.pruned = 0
        self.fresh = False

    def reach(self, v: Vec) -> List[Vec]:
        # markings reachable in the bare net: a necessary condition on every goal
        if v in self.reach_cache:
            return self.reach_cache[v]
        seen = {v: None}
        order = [v]
        i = 0
        while i < len(order):
            u = order[i]
            i += 1
            for _, w, _ in self.vn.successors(u):
                if w in seen:
                    continue
                if sum(w) > self.cap:
                    self.pruned += 1
                    continue
                seen[w] = None
                order.append(w)
        order.sort(key=lambda q: (sum(q), q))
        self.reach_cache[v] = order
        return order

    def demand(self, goal) -> bool:
        if goal not in self.goals:
            self.goals[goal] = None
            self.fresh = True
            return False
        return self.goals[goal] is not None

    def evaluate(self, goal) -> Optional[tuple]:
        var, a, b = goal
        level = AnnotatedVariable.parse(var).allowance
        for prod in self.heads[var]:
            body = prod[1]
            if not body or (len(body) == 1 and body[0] in self.ts):
                c = a
                if body:
                    pre, delta = self.tindex[body[0]]
                    if any(a[i] < n for i, n in pre):
                        continue
                    w = list(a)
                    for i, d in delta:
                        w[i] += d
                    c = tuple(w)
                if c == b:
                    return (prod,)
                continue
            left, right = body
            low_right = AnnotatedVariable.parse(right).allowance == level - 1
            if low_right:
                # transfer q1 from Mf[l] to Mf[l-1], add q2 to Mf[l] and Mi[l-1]
                for q1 in _sub_vectors(b):
                    rest = _minus(b, q1)
                    for c in self.reach(a):
                        if not _leq(rest, c):
                            continue
                        q2 = _minus(c, rest)
                        if q1 not in self.reach(q2):
                            continue
                        s1 = self.demand((right, q2, q1))
                        s2 = self.demand((left, a, c))
                        if s1 and s2:
                            return (prod, q1, q2)
            else:
                # transfer q1 from Mi[l] to Mi[l-1], add q2 to Mi[l] and Mf[l-1]
                for q1 in _sub_vectors(a):
                    rest = _minus(a, q1)
                    for q2 in self.reach(q1):
                        c = _plus(rest, q2)
                        if sum(c) > self.cap:
                            self.pruned += 1
                            continue
                        if b not in self.reach(c):
                            continue
                        s1 = self.demand((left, q1, q2))
                        s2 = self.demand((right, c, b))
                        if s1 and s2:
                            return (prod, q1, q2)
        return None

    def solve(self, root) -> Optional[bool]:
        self.goals[root] = None
        changed = True
        while changed:
            changed = False
            for goal in list(self.goals):
                if self.goals[goal] is not None:
                    continue
                self.fresh = False
                just = self.evaluate(goal)
                changed |= self.fresh
                if just is not None:
                    self.goals[goal] = just
                    changed = True
                    if goal == root:
                        return True
                if len(self.goals) > self.max_goals:
                    return None
        return False


def run_traverse(net: PetriNet, gk: Grammar, x: str, m: Multiset, m_prime: Multiset,
                 budget: SearchBudget, state: Optional[TraverseState] = None) -> TraverseResult:
    """Run the traversal from a proper call on the annotated variable ``x``."""
    call = AnnotatedVariable.parse(x)
    if x not in gk.variables:
        raise ValueError(f"{x} is not a variable of the annotated grammar")
    k = max(AnnotatedVariable.parse(v).allowance for v in gk.variables)
    if state is None:
        empty = [Multiset() for _ in range(k + 1)]
        state = TraverseState(list(empty), list(empty), call)
        state.Mi[call.allowance] = m
        state.Mf[call.allowance] = m_prime
    state.check_proper()
    solver = _Solver(net, gk, budget)
    vn = solver.vn
    root = (x, vn.vec(state.Mi[call.allowance]), vn.vec(state.Mf[call.allowance]))
    answer = solver.solve(root)
    if answer is None:
        return TraverseResult(Verdict.BUDGET_EXCEEDED, [], len(solver.goals), solver.pruned, "goal cap")
    if not answer:
        if solver.pruned:
            return TraverseResult(Verdict.BUDGET_EXCEEDED, [], len(solver.goals), solver.pruned, "token cap")
        return TraverseResult(Verdict.EXHAUSTED_NO, [], len(solver.goals), 0)
    trace = _replay(solver, state, root)
    return TraverseResult(Verdict.REACHED, trace, len(solver.goals), solver.pruned)


def _replay(solver: _Solver, state: TraverseState, root) -> List[dict]:
    """Re-execute the chosen resolution on explicit arrays, recording each choice."""
    vn = solver.vn
    ms = vn.multiset
    Mi = [vn.vec(q) for q in state.Mi]
    Mf = [vn.vec(q) for q in state.Mf]
    trace: List[dict] = []

    def snap():
        return TraverseState([ms(v) for v in Mi], [ms(v) for v in Mf], state.call).digest()

    def log(line, **kw):
        kw = {"line": line, **kw, "state": snap()}
        trace.append(kw)

    def call(goal, depth):
        assert depth <= len(Mi), "recursion deeper than the number of levels"
        while True:
            var, _, _ = goal
            level = AnnotatedVariable.parse(var).allowance
            assert Mi[level] == goal[1] and Mf[level] == goal[2]
            just = solver.goals[goal]
            prod = just[0]
            head, body = prod
            log(2, production=f"{head} -> {' '.join(body) if body else 'eps'}")
            if len(just) == 1:
                if body:
                    pre, delta = solver.tindex[body[0]]
                    w = list(Mi[level])
                    for i, d in delta:
                        w[i] += d
                    Mi[level] = tuple(w)
                log(4)
                qty = Mi[level]
                Mi[level] = _minus(Mi[level], qty)
                Mf[level] = _minus(Mf[level], qty)
                log(5, qty=str(ms(qty)))
                return
            _, q1, q2 = just
            left, right = body
            if AnnotatedVariable.parse(right).allowance == level - 1:
                Mf[level] = _minus(Mf[level], q1)
                Mf[level - 1] = _plus(Mf[level - 1], q1)
                log(7, qty=str(ms(q1)))
                Mf[level] = _plus(Mf[level], q2)
                Mi[level - 1] = _plus(Mi[level - 1], q2)
                log(8, qty=str(ms(q2)))
                call((right, Mi[level - 1], Mf[level - 1]), depth + 1)
                _assert_lower_empty(Mi, Mf, level)
                log(10)
                goal = (left, Mi[level], Mf[level])
            else:
                Mi[level] = _minus(Mi[level], q1)
                Mi[level - 1] = _plus(Mi[level - 1], q1)
                log(12, qty=str(ms(q1)))
                Mi[level] = _plus(Mi[level], q2)
                Mf[level - 1] = _plus(Mf[level - 1], q2)
                log(13, qty=str(ms(q2)))
                call((left, Mi[level - 1], Mf[level - 1]), depth + 1)
                _assert_lower_empty(Mi, Mf, level)
                log(15)
                goal = (right, Mi[level], Mf[level])

    call(root, 0)
    top = AnnotatedVariable.parse(root[0]).allowance
    _assert_lower_empty(Mi, Mf, top + 1)
    log(17)
    return trace


def _assert_lower_empty(Mi: Sequence[Vec], Mf: Sequence[Vec], level: int) -> None:
    for j in range(level):
        if any(Mi[j]) or any(Mf[j]):
            raise AssertionError(f"level {j} not empty after replay")
