"""Reachability along an index-bounded CFL, reduced to reachability in a net with weak tests.

The traversal procedure is written as a stratified counter program: counter
matrices ``Mi.j.s`` / ``Mf.j.s`` hold the two marking arrays, ``v.X.j`` passes
the parameter of a call on ``X[j]``, and one subroutine per allowance level
plays the traversal, with helper subroutines for the quantity loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .core import Multiset, SearchBudget, Verdict
from .grammar import AnnotatedVariable, Grammar, NotRestricted, annotate
from .netprog import (Command, CompiledProgram, Dec, Gosub, Goto, Halt, IfAllZeroGoto, Inc, NetProgram,
                      NondetGoto, Return, Subroutine, compile_program, program_index_function)
from .oracle import ProblemInstance, UnboundTerminal
from .petri import PetriNet, ReachResult, bounded_reach, fire_word


def mi(j: int, s: str) -> str:
    return f"Mi.{j}.{s}"


def mf(j: int, s: str) -> str:
    return f"Mf.{j}.{s}"


def param(x: str, j: int) -> str:
    return f"v.{x}.{j}"


@dataclass(frozen=True)
class ForwardArtifact:
    program: NetProgram
    compiled: CompiledProgram
    f: Dict[str, int]
    target: Multiset
    names: Dict[str, str]  # annotated variable X[j] -> its parameter counter

    @property
    def net(self) -> PetriNet:
        return self.compiled.net


class _Emitter:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.cmds: List[Command] = []
        self.n = 0

    def fresh(self) -> str:
        self.n += 1
        return f"{self.prefix}.{self.n}"

    def emit(self, op, label=None) -> str:
        label = label or self.fresh()
        self.cmds.append(Command(label, op))
        return label

    def add_marking(self, counter, m: Multiset, sign: int):
        for s, n in m.items():
            for _ in range(n):
                self.emit(Inc(counter(s)) if sign > 0 else Dec(counter(s)))


def _quantity_loop(name: str, level: int, places, moves) -> Subroutine:
    """``loop: goto q_1 or ... or goto out``; each ``q_s`` applies ``moves(s)`` once."""
    e = _Emitter(name)
    loop, out = f"{name}.loop", f"{name}.out"
    bodies = [f"{name}.{s}" for s in places]
    e.emit(NondetGoto(tuple(bodies) + (out,)), loop)
    for s, lab in zip(places, bodies):
        ops = moves(s)
        e.emit(ops[0], lab)
        for op in ops[1:]:
            e.emit(op)
        e.emit(Goto(loop))
    e.emit(Return(), out)
    return Subroutine(name, level, tuple(e.cmds))


def build_forward_program(inst: ProblemInstance, k: int, m: Multiset, m_prime: Multiset,
                          gk: Grammar = None) -> Tuple[NetProgram, Dict[str, str]]:
    """Program simulating a proper call on ``start[k]`` with ``Mi[k] = m``, ``Mf[k] = m_prime``.

    ``k`` is the annotation bound itself (the call language is ``L(start[k])``).
    """
    g, net = inst.grammar, inst.net
    if not g.restricted:
        raise NotRestricted("the forward construction needs a restricted grammar")
    unbound = set(g.terminals) - set(net.transitions)
    if unbound:
        raise UnboundTerminal(f"terminals not bound to transitions: {sorted(unbound)}")
    gk = gk or annotate(g, k)
    places = list(net.places)
    bases = sorted({AnnotatedVariable.parse(v).base for v in gk.variables})
    counters = [param(x, j) for j in range(k + 1) for x in bases]
    counters += [c(j, s) for j in range(k + 1) for c in (mi, mf) for s in places]
    names = {v: param(*_split(v)) for v in gk.variables}
    level = lambda j: k - j + 1  # program level of traverse_j
    subs: List[Subroutine] = []

    def lower_zero(j):
        return tuple(c(i, s) for i in range(j) for c in (mi, mf) for s in places)

    # main
    e = _Emitter("main")
    e.add_marking(lambda s: mi(k, s), m, +1)
    e.add_marking(lambda s: mf(k, s), m_prime, +1)
    e.emit(Inc(names[f"{inst.start}[{k}]"]))
    e.emit(Gosub(f"trav{k}"))
    e.emit(IfAllZeroGoto(lower_zero(k + 1), "success"), "zero1")
    e.emit(Halt(), "success")
    subs.append(Subroutine("main", 0, tuple(e.cmds)))

    heads = gk.by_head()
    for j in range(k, -1, -1):
        name = f"trav{j}"
        e = _Emitter(name)
        handlers = []
        for v in gk.variables:
            if AnnotatedVariable.parse(v).allowance == j:
                handlers.extend(heads[v])
        labels = [f"{name}.p{i}" for i in range(len(handlers))]
        if len(labels) >= 2:
            e.emit(NondetGoto(tuple(labels)), name)
        elif labels:
            e.emit(Goto(labels[0]), name)
        else:
            e.emit(Goto(name), name)
        helpers = set()
        for lab, (head, body) in zip(labels, handlers):
            e.emit(Dec(names[head]), lab)
            if len(body) <= 1:
                if body:
                    e.add_marking(lambda s: mi(j, s), net.I(body[0]), -1)
                    e.add_marking(lambda s: mi(j, s), net.O(body[0]), +1)
                e.emit(Gosub(f"sub_to{j}"))
                e.emit(Goto(f"{name}.exit"))
                helpers.add("sub")
                continue
            left, right = body
            if AnnotatedVariable.parse(right).allowance == j - 1:
                first, then, tr, add = right, left, f"tr_f{j}", f"add_fi{j}"
            else:
                first, then, tr, add = left, right, f"tr_i{j}", f"add_if{j}"
            helpers.update((tr, add))
            e.emit(Gosub(tr))
            e.emit(Gosub(add))
            e.emit(Inc(names[first]))
            e.emit(Gosub(f"trav{j - 1}"))
            after = e.fresh()
            e.emit(IfAllZeroGoto(lower_zero(j), after))
            e.emit(Inc(names[then]), after)
            e.emit(Goto(name))
        e.emit(Return(), f"{name}.exit")
        subs.append(Subroutine(name, level(j), tuple(e.cmds)))
        hl = level(j) + 1
        if "sub" in helpers:
            subs.append(_quantity_loop(f"sub_to{j}", hl, places, lambda s, j=j: [Dec(mi(j, s)), Dec(mf(j, s))]))
        if f"tr_f{j}" in helpers:
            subs.append(_quantity_loop(f"tr_f{j}", hl, places, lambda s, j=j: [Dec(mf(j, s)), Inc(mf(j - 1, s))]))
            subs.append(_quantity_loop(f"add_fi{j}", hl, places, lambda s, j=j: [Inc(mf(j, s)), Inc(mi(j - 1, s))]))
        if f"tr_i{j}" in helpers:
            subs.append(_quantity_loop(f"tr_i{j}", hl, places, lambda s, j=j: [Dec(mi(j, s)), Inc(mi(j - 1, s))]))
            subs.append(_quantity_loop(f"add_if{j}", hl, places, lambda s, j=j: [Inc(mi(j, s)), Inc(mf(j - 1, s))]))
    return NetProgram(tuple(counters), tuple(subs), "main"), names


def _split(v: str):
    a = AnnotatedVariable.parse(v)
    return a.base, a.allowance


def forward_artifact(inst: ProblemInstance, mutation: Optional[str] = None) -> ForwardArtifact:
    if inst.k is None or inst.k < 1:
        raise ValueError("the forward reduction needs an index bound k >= 1")
    k = inst.k - 1
    prog, names = build_forward_program(inst, k, inst.net.init, inst.m_final)
    compiled = compile_program(prog, mutation)
    levels = {c(j, s): j for j in range(k + 1) for c in (mi, mf) for s in inst.net.places}
    f = program_index_function(prog, levels, compiled)
    return ForwardArtifact(prog, compiled, f, compiled.target(), names)


def certified_net_cap(inst: ProblemInstance) -> int:
    """Token bound that no successful run of the program exceeds, for non-increasing nets.

    Every goal marking of a successful traversal is bounded by the larger end
    marking and two arrays per level hold at most that much.  At most one
    parameter token is pending, call-site tokens never exceed the call depth
    ``k + 2``, and there is one control token.
    """
    k = inst.k - 1
    b = max(inst.net.init.total(), inst.m_final.total())
    return 2 * (k + 1) * b + 1 + (k + 2) + 1


def forward_decide(inst: ProblemInstance, budget: SearchBudget,
                   mutation: Optional[str] = None) -> Tuple[ReachResult, ForwardArtifact]:
    """Decide the instance by reachability of the halting marking in the compiled program net.

    For non-increasing nets the token cap is raised to ``certified_net_cap``
    and a negative answer pruned only at that cap is exact.
    """
    art = forward_artifact(inst, mutation)
    certified = inst.net.is_non_increasing()
    cap = max(budget.tokens, certified_net_cap(inst)) if certified else budget.tokens
    res = bounded_reach(art.net, art.target, budget.replace(tokens=cap))
    if res.verdict is Verdict.BUDGET_EXCEEDED and certified and res.reason == "token cap":
        res = ReachResult(Verdict.EXHAUSTED_NO, None, res.states_explored, res.pruned, "certified token cap")
    if res.reached and mutation is None:
        assert fire_word(art.net, art.net.init, res.witness) == art.target
    res.extra["net_token_cap"] = cap
    return res, art
