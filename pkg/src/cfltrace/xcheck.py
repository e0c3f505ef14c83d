"""Differential testing of the decision routes, with greedy shrinking of disagreements."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

from .core import Multiset, SearchBudget
from .gen import traversal_case, random_weak_net
from .grammar import Grammar, annotate, annotated
from .oracle import ProblemInstance, reach_along
from .petri import PetriNet, bounded_reach
from .reduce_bwd import backward_decide
from .reduce_fwd import forward_decide
from .traverse import run_traverse


@dataclass
class Comparison:
    verdicts: Dict[str, Optional[bool]]
    subject: object
    shrunk: object = None

    @property
    def disagreement(self) -> bool:
        return len({v for v in self.verdicts.values() if v is not None}) > 1

    @property
    def status(self) -> str:
        if self.disagreement:
            return "Disagreement"
        if any(v is None for v in self.verdicts.values()):
            return "Inconclusive"
        return "Agree"


def compare_instance(inst: ProblemInstance, budget: SearchBudget, forward: bool = True,
                     mutation: Optional[str] = None) -> Dict[str, Optional[bool]]:
    out = {"oracle": reach_along(inst, budget).as_bool()}
    level = inst.k - 1
    gk = annotate(inst.grammar, level)
    out["traverse"] = run_traverse(inst.net, gk, annotated(inst.start, level), inst.net.init,
                                   inst.m_final, budget).success
    if forward:
        out["forward"] = forward_decide(inst, budget, mutation)[0].as_bool()
    return out


def _instance_candidates(inst: ProblemInstance):
    g, net = inst.grammar, inst.net
    for i in range(len(g.productions)):
        prods = g.productions[:i] + g.productions[i + 1:]
        yield replace(inst, grammar=Grammar(g.variables, g.terminals, prods, g.start))
    for t in net.transitions:
        if len(net.transitions) == 1:
            break
        keep = [u for u in net.transitions if u != t]
        small = PetriNet(net.places, tuple(keep), {u: net.zero[u] for u in keep},
                         {u: net.inputs[u] for u in keep}, {u: net.outputs[u] for u in keep}, net.init)
        prods = tuple(p for p in g.productions if t not in p[1])
        terms = tuple(a for a in g.terminals if a != t)
        yield replace(inst, net=small, grammar=Grammar(g.variables, terms, prods, g.start))
    for p in net.init.support():
        yield replace(inst, net=net.with_init(net.init - Multiset.of(p)))
    for p in inst.m_final.support():
        yield replace(inst, m_final=inst.m_final - Multiset.of(p))


def shrink(subject, still_failing: Callable[[object], bool], candidates, limit: int = 200):
    """Greedy one-step deletions while the failure persists."""
    tries = 0
    changed = True
    while changed and tries < limit:
        changed = False
        for cand in candidates(subject):
            tries += 1
            if still_failing(cand):
                subject, changed = cand, True
                break
            if tries >= limit:
                break
    return subject


def xcheck_forward(seed: int, count: int, budget: SearchBudget, pairs: int = 2,
                   mutation: Optional[str] = None, forward: bool = True) -> List[Comparison]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        case = traversal_case(rng)
        chosen = rng.sample(case.pairs, min(pairs, len(case.pairs)))
        for m, m2 in chosen:
            inst = case.instance(m, m2)
            cmp = Comparison(compare_instance(inst, budget, forward, mutation), inst)
            if cmp.disagreement:
                def failing(x):
                    return Comparison(compare_instance(x, budget, forward, mutation), x).disagreement
                cmp.shrunk = shrink(inst, failing, _instance_candidates)
            out.append(cmp)
    return out


def xcheck_backward(seed: int, count: int, budget: SearchBudget) -> List[Comparison]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        case = random_weak_net(rng)
        direct = bounded_reach(case.net, case.m_final, budget).as_bool()
        via = backward_decide(case.net, case.f, case.m_final, budget)[0].as_bool()
        out.append(Comparison({"direct": direct, "backward": via}, case))
    return out
