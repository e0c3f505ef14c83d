"""Counter programs with stratified subroutines, their interpreter and their compilation to nets with tests."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from .core import Multiset, SearchBudget, Verdict
from .petri import PetriNet, is_weak


# commands

@dataclass(frozen=True)
class Inc:
    counter: str


@dataclass(frozen=True)
class Dec:
    counter: str


@dataclass(frozen=True)
class Goto:
    target: str


@dataclass(frozen=True)
class IfAllZeroGoto:
    """Blocks unless every listed counter is zero; never falls through."""
    counters: Tuple[str, ...]
    target: str


@dataclass(frozen=True)
class NondetGoto:
    targets: Tuple[str, ...]


@dataclass(frozen=True)
class Gosub:
    sub: str


@dataclass(frozen=True)
class Return:
    pass


@dataclass(frozen=True)
class Halt:
    pass


Op = Union[Inc, Dec, Goto, IfAllZeroGoto, NondetGoto, Gosub, Return, Halt]
FALLS_THROUGH = (Inc, Dec, Gosub)


@dataclass(frozen=True)
class Command:
    label: str
    op: Op


@dataclass(frozen=True)
class Subroutine:
    name: str
    level: int
    commands: Tuple[Command, ...]

    @property
    def entry(self) -> str:
        return self.commands[0].label


@dataclass(frozen=True)
class NetProgram:
    counters: Tuple[str, ...]
    subroutines: Tuple[Subroutine, ...]
    entry: str

    def sub(self, name: str) -> Subroutine:
        for s in self.subroutines:
            if s.name == name:
                return s
        raise KeyError(name)

    def commands(self):
        for s in self.subroutines:
            for c in s.commands:
                yield s, c

    def size(self) -> int:
        return sum(len(s.commands) for s in self.subroutines)


# checking

class ProgramError(ValueError):
    pass


class DuplicateLabel(ProgramError):
    pass


class DanglingJump(ProgramError):
    pass


class CrossSubroutineJump(ProgramError):
    pass


class LevelViolation(ProgramError):
    pass


class MissingReturn(ProgramError):
    pass


class UnknownCounter(ProgramError):
    pass


def _targets(op: Op) -> Tuple[str, ...]:
    if isinstance(op, (Goto, IfAllZeroGoto)):
        return (op.target,)
    if isinstance(op, NondetGoto):
        return op.targets
    return ()


def program_errors(p: NetProgram) -> List[ProgramError]:
    errs: List[ProgramError] = []
    owner: Dict[str, str] = {}
    names = [s.name for s in p.subroutines]
    if len(set(names)) != len(names):
        errs.append(DuplicateLabel(f"duplicate subroutine names in {names}"))
    subs = {s.name: s for s in p.subroutines}
    if p.entry not in subs:
        errs.append(DanglingJump(f"entry subroutine {p.entry!r} is not defined"))
    elif subs[p.entry].level != 0:
        errs.append(LevelViolation(f"entry subroutine {p.entry!r} must have level 0"))
    for s in p.subroutines:
        if not s.commands:
            errs.append(MissingReturn(f"subroutine {s.name!r} has no commands"))
            continue
        for c in s.commands:
            if c.label in owner:
                errs.append(DuplicateLabel(f"label {c.label!r} is not unique"))
            owner.setdefault(c.label, s.name)
    counters = set(p.counters)
    for s in p.subroutines:
        if not s.commands:
            continue
        returns = [c for c in s.commands if isinstance(c.op, Return)]
        if s.name == p.entry:
            if returns:
                errs.append(LevelViolation(f"entry subroutine {s.name!r} cannot return"))
        elif len(returns) != 1:
            errs.append(MissingReturn(f"subroutine {s.name!r} needs exactly one return, has {len(returns)}"))
        elif s.commands[0] is returns[0]:
            errs.append(MissingReturn(f"subroutine {s.name!r}: entry and exit coincide"))
        for i, c in enumerate(s.commands):
            op = c.op
            used = ()
            if isinstance(op, (Inc, Dec)):
                used = (op.counter,)
            elif isinstance(op, IfAllZeroGoto):
                used = op.counters
            for x in used:
                if x not in counters:
                    errs.append(UnknownCounter(f"{c.label}: unknown counter {x!r}"))
            for t in _targets(op):
                if t not in owner:
                    errs.append(DanglingJump(f"{c.label}: jump to undefined label {t!r}"))
                elif owner[t] != s.name:
                    errs.append(CrossSubroutineJump(f"{c.label}: jump into {owner[t]!r}"))
            if isinstance(op, FALLS_THROUGH) and i == len(s.commands) - 1:
                errs.append(DanglingJump(f"{c.label}: control falls off the end of {s.name!r}"))
            if isinstance(op, Gosub):
                if op.sub not in subs:
                    errs.append(DanglingJump(f"{c.label}: gosub to undefined {op.sub!r}"))
                elif op.sub == p.entry:
                    errs.append(LevelViolation(f"{c.label}: the entry subroutine cannot be called"))
                elif subs[op.sub].level != s.level + 1:
                    errs.append(LevelViolation(
                        f"{c.label}: level {s.level} subroutine calls {op.sub!r} of level {subs[op.sub].level}"))
    return errs


def check_program(p: NetProgram) -> Dict[str, int]:
    """Level of each subroutine; raises the first problem found (all problems in ``.problems``)."""
    errs = program_errors(p)
    if errs:
        first = errs[0]
        first.problems = errs
        raise first
    return {s.name: s.level for s in p.subroutines}


# interpretation

class _Layout:
    def __init__(self, p: NetProgram):
        self.op: Dict[str, Op] = {}
        self.next: Dict[str, Optional[str]] = {}
        self.sub_of: Dict[str, str] = {}
        for s in p.subroutines:
            for i, c in enumerate(s.commands):
                self.op[c.label] = c.op
                self.next[c.label] = s.commands[i + 1].label if i + 1 < len(s.commands) else None
                self.sub_of[c.label] = s.name
        self.entry_of = {s.name: s.entry for s in p.subroutines}


@dataclass
class ProgramRun:
    verdict: str  # "Halted" | "Stuck" | "BudgetExceeded"
    valuation: Optional[Dict[str, int]] = None
    halting_valuations: List[Dict[str, int]] = field(default_factory=list)
    configurations: int = 0
    complete: bool = False

    @property
    def halted(self) -> bool:
        return self.verdict == "Halted"


def run_program(p: NetProgram, budget: SearchBudget, collect: bool = False) -> ProgramRun:
    """Explore all runs breadth-first.

    Configurations whose counter sum exceeds ``budget.tokens`` are pruned.  With
    ``collect`` the search continues after the first halt so that all halting
    valuations within the caps are gathered; ``complete`` says whether that
    set is exact.
    """
    check_program(p)
    lay = _Layout(p)
    idx = {x: i for i, x in enumerate(p.counters)}
    start = (lay.entry_of[p.entry], (), tuple(0 for _ in p.counters))
    seen = {start}
    queue = deque([start])
    halts: Dict[tuple, None] = {}
    pruned = False
    while queue:
        if len(seen) > budget.steps:
            pruned = True
            break
        pc, stack, vals = queue.popleft()
        op = lay.op[pc]
        succs = []
        if isinstance(op, Halt):
            halts.setdefault(vals)
            if not collect:
                break
            continue
        if isinstance(op, Inc):
            v = list(vals)
            v[idx[op.counter]] += 1
            succs.append((lay.next[pc], stack, tuple(v)))
        elif isinstance(op, Dec):
            i = idx[op.counter]
            if vals[i] > 0:
                v = list(vals)
                v[i] -= 1
                succs.append((lay.next[pc], stack, tuple(v)))
        elif isinstance(op, Goto):
            succs.append((op.target, stack, vals))
        elif isinstance(op, IfAllZeroGoto):
            if all(vals[idx[x]] == 0 for x in op.counters):
                succs.append((op.target, stack, vals))
        elif isinstance(op, NondetGoto):
            succs.extend((t, stack, vals) for t in op.targets)
        elif isinstance(op, Gosub):
            succs.append((lay.entry_of[op.sub], stack + (pc,), vals))
        elif isinstance(op, Return):
            if stack:
                succs.append((lay.next[stack[-1]], stack[:-1], vals))
        for s in succs:
            if s in seen:
                continue
            if sum(s[2]) > budget.tokens:
                pruned = True
                continue
            seen.add(s)
            queue.append(s)
    vals_list = [dict(zip(p.counters, v)) for v in halts]
    if halts:
        first = vals_list[0]
        return ProgramRun("Halted", first, vals_list, len(seen), collect and not pruned)
    if pruned:
        return ProgramRun("BudgetExceeded", None, [], len(seen), False)
    return ProgramRun("Stuck", None, [], len(seen), True)


# compilation

HALT_PLACE = "@halt"


def control_place(label: str) -> str:
    return "@" + label


def callsite_place(label: str) -> str:
    return "ret@" + label


@dataclass(frozen=True)
class CompiledProgram:
    net: PetriNet
    place_of: Mapping[str, str]
    control_places: Tuple[str, ...]
    callsite_places: Tuple[str, ...]
    halt_place: str = HALT_PLACE

    def target(self, valuation: Optional[Mapping[str, int]] = None) -> Multiset:
        m = {self.halt_place: 1}
        for x, n in (valuation or {}).items():
            if n:
                m[self.place_of[x]] = n
        return Multiset(m)


MUTATIONS = ("dec-noop", "drop-guards")


def compile_program(p: NetProgram, mutation: Optional[str] = None) -> CompiledProgram:
    """Compile to a net with tests.

    ``mutation`` deliberately corrupts the output for differential-testing
    drills: ``dec-noop`` makes decrements leave their counter alone,
    ``drop-guards`` compiles set-guards without their zero tests.
    """
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    check_program(p)
    lay = _Layout(p)
    labels = [c.label for _, c in p.commands()]
    gosubs = [c.label for _, c in p.commands() if isinstance(c.op, Gosub)]
    ctrl = [control_place(l) for l in labels]
    rets = [callsite_place(l) for l in gosubs]
    places = list(p.counters) + ctrl + rets + [HALT_PLACE]
    callers: Dict[str, List[str]] = {}
    for _, c in p.commands():
        if isinstance(c.op, Gosub):
            callers.setdefault(c.op.sub, []).append(c.label)
    trans: Dict[str, tuple] = {}
    for s, c in p.commands():
        op, here = c.op, control_place(c.label)
        name = "t:" + c.label
        nxt = lay.next[c.label]
        if isinstance(op, Inc):
            trans[name] = ({here: 1}, {control_place(nxt): 1, op.counter: 1})
        elif isinstance(op, Dec):
            pre = {here: 1} if mutation == "dec-noop" else {here: 1, op.counter: 1}
            trans[name] = (pre, {control_place(nxt): 1})
        elif isinstance(op, Goto):
            trans[name] = ({here: 1}, {control_place(op.target): 1})
        elif isinstance(op, IfAllZeroGoto):
            guard = () if mutation == "drop-guards" else op.counters
            trans[name] = ({here: 1}, {control_place(op.target): 1}, guard)
        elif isinstance(op, NondetGoto):
            for i, t in enumerate(op.targets):
                trans[f"{name}#{i}"] = ({here: 1}, {control_place(t): 1})
        elif isinstance(op, Gosub):
            trans[name] = ({here: 1}, {control_place(lay.entry_of[op.sub]): 1, callsite_place(c.label): 1})
        elif isinstance(op, Return):
            for site in callers.get(s.name, []):
                trans[f"{name}@{site}"] = ({here: 1, callsite_place(site): 1},
                                           {control_place(lay.next[site]): 1})
        elif isinstance(op, Halt):
            trans[name] = ({here: 1}, {HALT_PLACE: 1})
    # a halt inside a subroutine leaves call-site tokens behind; drain them once halted
    for site in gosubs:
        trans["t:unwind@" + site] = ({HALT_PLACE: 1, callsite_place(site): 1}, {HALT_PLACE: 1})
    init = Multiset({control_place(lay.entry_of[p.entry]): 1})
    net = PetriNet.build(places, trans, init)
    place_of = {x: x for x in p.counters}
    place_of.update({l: control_place(l) for l in labels})
    return CompiledProgram(net, place_of, tuple(ctrl), tuple(rets))


class NotWeak(ValueError):
    def __init__(self, msg, violations):
        super().__init__(msg)
        self.violations = violations


def program_index_function(p: NetProgram, level_of_counter: Mapping[str, int],
                           compiled: Optional[CompiledProgram] = None) -> Dict[str, int]:
    """Counters get their declared level; every other place sits two above the highest one."""
    compiled = compiled or compile_program(p)
    top = max(level_of_counter.values(), default=0) + 2
    f = {q: top for q in compiled.net.places}
    for x, lvl in level_of_counter.items():
        f[compiled.place_of[x]] = lvl
    ok, bad = is_weak(compiled.net, f)
    if not ok:
        tests = sorted({t for _, _, t in bad})
        raise NotWeak(f"tests not downward closed: {', '.join(tests)}", bad)
    return f


def control_tokens_ok(compiled: CompiledProgram, markings: Sequence[Multiset]) -> bool:
    """Exactly one control token (or the halt token) in every given marking."""
    ctrl = set(compiled.control_places) | {compiled.halt_place}
    return all(sum(n for q, n in m.items() if q in ctrl) == 1 for m in markings)
