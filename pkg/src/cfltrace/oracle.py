"""Brute-force ground truth for reachability of a marking along a (finite-index) CFL.

Three routes, all independent of the reductions:

* ``enumerate_and_fire`` lists the bounded language and fires each word;
* for an index bound, ``reach_along`` searches the product of index-bounded
  sentential forms and net markings, firing terminals as soon as they lead;
* without an index bound, ``reach_along`` computes marking-to-marking summaries
  per variable as a least fixpoint.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .core import BudgetExceeded, Multiset, SearchBudget, Verdict, Word
from .grammar import Grammar, GrammarError, _min_yield, derive_word, enum_language, is_empty_language
from .petri import PetriNet, ReachResult, VectorNet, fire_word, max_run_length

logger = logging.getLogger(__name__)


class UnboundTerminal(GrammarError):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    net: PetriNet
    grammar: Grammar
    start: str
    k: Optional[int]
    m_final: Multiset

    def __post_init__(self):
        if not self.net.transitions:
            raise ValueError("the net needs at least one transition")
        unbound = set(self.grammar.terminals) - set(self.net.transitions)
        if unbound:
            raise UnboundTerminal(f"terminals not bound to transitions: {sorted(unbound)}")
        if self.start not in self.grammar.variables:
            raise GrammarError(f"unknown start variable {self.start!r}")

    def with_markings(self, m: Multiset, m_final: Multiset) -> "ProblemInstance":
        return ProblemInstance(self.net.with_init(m), self.grammar, self.start, self.k, m_final)


def enumerate_and_fire(inst: ProblemInstance, budget: SearchBudget) -> ReachResult:
    """Fire every enumerated word, shortest first.

    A negative is exact only when the language is empty or every firing
    sequence of the net from the initial marking is no longer than the bound.
    """
    g, net = inst.grammar, inst.net
    try:
        words = enum_language(g, inst.start, budget.word_len, inst.k, budget)
    except BudgetExceeded as exc:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(exc.partial or ()), 0, "enumeration cap")
    for n, w in enumerate(sorted(words, key=lambda w: (len(w), w)), 1):
        if fire_word(net, net.init, w) == inst.m_final:
            return ReachResult(Verdict.REACHED, w, n)
    if is_empty_language(g, inst.start) or (inst.k is not None and inst.k < 1):
        return ReachResult(Verdict.EXHAUSTED_NO, None, len(words), 0, "empty language")
    longest = max_run_length(net, net.init, budget)
    if longest is not None and longest <= budget.word_len:
        return ReachResult(Verdict.EXHAUSTED_NO, None, len(words), 0, "runs bounded by word length")
    return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(words), 1, "longer words not excluded")


def reach_along(inst: ProblemInstance, budget: SearchBudget, caps_sufficient: bool = False) -> ReachResult:
    """Does ``m_final`` belong to the markings reachable along ``L^(k)(start)``?

    ``caps_sufficient`` is the caller's declaration that, if a witness exists,
    one exists whose prefix markings stay within ``budget.tokens`` and whose
    pending terminals stay within ``budget.word_len``; pruning at those caps
    then does not make a negative inconclusive.
    """
    if is_empty_language(inst.grammar, inst.start) or (inst.k is not None and inst.k < 1):
        return ReachResult(Verdict.EXHAUSTED_NO, None, 0, 0, "empty language")
    if inst.k is None:
        res = _summaries(inst, budget, caps_sufficient)
    else:
        res = _product(inst, budget, caps_sufficient)
    if res.reached:
        assert fire_word(inst.net, inst.net.init, res.witness) == inst.m_final
    return res


def _product(inst: ProblemInstance, budget: SearchBudget, caps_sufficient: bool) -> ReachResult:
    g, net, k = inst.grammar, inst.net, inst.k
    vs = set(g.variables)
    heads = g.by_head()
    low = _min_yield(g)
    vn = VectorNet(net)
    tindex = {t: (pre, delta, zero, eff) for t, pre, delta, zero, eff in vn.trans}
    src = vn.vec(net.init)
    goal = vn.vec(inst.m_final)
    longest = max_run_length(net, net.init, budget)
    cap = budget.tokens
    if longest is not None:
        # runs are bounded: no word longer than the longest run can fire
        pending_cap = longest
    else:
        pending_cap = budget.word_len

    def fire_chunk(v, chunk):
        for t in chunk:
            pre, delta, zero, _ = tindex[t]
            for i, n in pre:
                if v[i] < n:
                    return None
            for i in zero:
                if v[i]:
                    return None
            w = list(v)
            for i, d in delta:
                w[i] += d
            v = tuple(w)
            if sum(v) > cap:
                return "cap"
        return v

    pruned_tok = pruned_len = 0
    start = (src, (inst.start,))
    best = {start: 0}
    parent: Dict[tuple, Optional[tuple]] = {start: None}
    tie = itertools.count()
    heap = [(0, next(tie), start)]
    done = set()
    while heap:
        cost, _, state = heapq.heappop(heap)
        if state in done:
            continue
        done.add(state)
        if len(done) > budget.steps:
            return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(done), pruned_tok + pruned_len, "state cap")
        v, suffix = state
        if not suffix:
            if v == goal:
                return ReachResult(Verdict.REACHED, _unwind_chunks(parent, state), len(done),
                                   pruned_tok + pruned_len)
            continue
        nvars = sum(1 for s in suffix if s in vs)
        for pos, sym in enumerate(suffix):
            if sym not in vs:
                continue
            for _, body in heads[sym]:
                nv = nvars - 1 + sum(1 for s in body if s in vs)
                if nv > k:
                    continue
                new = suffix[:pos] + body + suffix[pos + 1:]
                lead = 0
                while lead < len(new) and new[lead] not in vs:
                    lead += 1
                chunk, rest = new[:lead], new[lead:]
                if any(low[s] == float("inf") for s in rest if s in vs):
                    continue
                pending = sum(1 for s in rest if s not in vs)
                if longest is not None and pending + sum(low[s] for s in rest if s in vs) > longest:
                    continue
                if pending > pending_cap:
                    pruned_len += 1
                    continue
                w = fire_chunk(v, chunk)
                if w is None:
                    continue
                if w == "cap":
                    pruned_tok += 1
                    continue
                nxt = (w, rest)
                c = cost + len(chunk)
                if nxt in done or best.get(nxt, 1 << 60) <= c:
                    continue
                best[nxt] = c
                parent[nxt] = (state, chunk)
                heapq.heappush(heap, (c, next(tie), nxt))
    pruned = pruned_tok + pruned_len
    if pruned and not caps_sufficient:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(done), pruned,
                           "token cap" if pruned_tok else "pending-terminal cap")
    return ReachResult(Verdict.EXHAUSTED_NO, None, len(done), pruned)


def _unwind_chunks(parent, state) -> Word:
    out = []
    while parent[state] is not None:
        state, chunk = parent[state]
        out.append(chunk)
    return tuple(t for chunk in reversed(out) for t in chunk)


def _summaries(inst: ProblemInstance, budget: SearchBudget, caps_sufficient: bool) -> ReachResult:
    # S[(X, m)] maps each m' reachable from m along L(X) to a shortest word found so far
    g, net = inst.grammar, inst.net
    ts = set(g.terminals)
    heads = g.by_head()
    vn = VectorNet(net)
    tindex = {t: (pre, delta, zero) for t, pre, delta, zero, _ in vn.trans}
    cap = budget.tokens
    src = vn.vec(net.init)
    goal = vn.vec(inst.m_final)
    summary: Dict[Tuple[str, tuple], Dict[tuple, Word]] = {}
    pruned = 0

    def step(v, t):
        nonlocal pruned
        pre, delta, zero = tindex[t]
        for i, n in pre:
            if v[i] < n:
                return None
        for i in zero:
            if v[i]:
                return None
        w = list(v)
        for i, d in delta:
            w[i] += d
        if sum(w) > cap:
            pruned += 1
            return None
        return tuple(w)

    if sum(src) > cap:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, 0, 1, "initial marking over token cap")
    summary[(inst.start, src)] = {}
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        for key in list(summary):
            var, v0 = key
            for _, body in heads[var]:
                frontier: Dict[tuple, Word] = {v0: ()}
                for s in body:
                    nxt: Dict[tuple, Word] = {}
                    for v, w in frontier.items():
                        if s in ts:
                            u = step(v, s)
                            outs = {} if u is None else {u: (s,)}
                        else:
                            sub = (s, v)
                            if sub not in summary:
                                summary[sub] = {}
                                changed = True
                            outs = summary[sub]
                        for u, piece in outs.items():
                            cand = w + piece
                            old = nxt.get(u)
                            if old is None or len(cand) < len(old):
                                nxt[u] = cand
                    frontier = nxt
                    if not frontier:
                        break
                table = summary[key]
                for u, w in frontier.items():
                    old = table.get(u)
                    if old is None or len(w) < len(old):
                        table[u] = w
                        changed = True
            if len(summary) > budget.steps:
                return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(summary), pruned, "state cap")
    top = summary[(inst.start, src)]
    if goal in top:
        return ReachResult(Verdict.REACHED, top[goal], len(summary), pruned, extra={"rounds": rounds})
    if pruned and not caps_sufficient:
        return ReachResult(Verdict.BUDGET_EXCEEDED, None, len(summary), pruned, "token cap")
    return ReachResult(Verdict.EXHAUSTED_NO, None, len(summary), pruned, extra={"rounds": rounds})


def certify_witness(inst: ProblemInstance, res: ReachResult) -> bool:
    """Re-derive the witness in the grammar and replay it on the net."""
    if not res.reached:
        return False
    d = derive_word(inst.grammar, inst.start, res.witness, inst.k)
    return d is not None and fire_word(inst.net, inst.net.init, res.witness) == inst.m_final


def words_along(net: PetriNet, g: Grammar, a: str, m: Multiset, max_len: int, max_vars: int,
                budget: SearchBudget) -> Dict[Word, Multiset]:
    """Every word of ``L(a)`` up to ``max_len`` that fires from ``m``, with the marking it reaches.

    Leftmost derivations with at most ``max_vars`` variables per form are
    followed, firing terminals as soon as they lead the form.  Exhaustive for
    grammars whose leftmost derivations never need more variables.
    """
    vs = set(g.variables)
    heads = g.by_head()
    low = _min_yield(g)
    vn = VectorNet(net)
    tindex = {t: (pre, delta, zero) for t, pre, delta, zero, _ in vn.trans}
    out: Dict[Word, Multiset] = {}
    if low.get(a, float("inf")) > max_len:
        return out
    seen = set()
    stack = [((), vn.vec(m), (a,))]
    while stack:
        word, v, rest = stack.pop()
        j = 0
        while j < len(rest) and rest[j] not in vs:
            pre, delta, zero = tindex[rest[j]]
            if any(v[i] < n for i, n in pre) or any(v[i] for i in zero):
                break
            w = list(v)
            for i, d in delta:
                w[i] += d
            v, word, j = tuple(w), word + (rest[j],), j + 1
        else:
            rest = rest[j:]
            if not rest:
                out.setdefault(word, vn.multiset(v))
                continue
            key = (word, v, rest)
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > budget.derivation_steps:
                raise BudgetExceeded("derivation-step cap", out)
            for _, body in heads[rest[0]]:
                new = body + rest[1:]
                if sum(1 for s in new if s in vs) > max_vars:
                    continue
                if len(word) + sum(low[s] if s in vs else 1 for s in new) > max_len:
                    continue
                stack.append((word, v, new))
            continue
        # a leading terminal could not fire
    return out
