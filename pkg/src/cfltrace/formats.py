"""Text formats: ``.pn`` nets, ``.cfg`` grammars, ``.np`` programs, ``.inst`` problem instances, level maps as JSON.

Every ``dump_*`` emits the canonical text, so ``dump(load(text)) == text`` for
canonical inputs and ``load(dump(x)) == x`` for all values.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import EMPTY, Multiset, format_multiset, parse_multiset
from .grammar import Grammar, GrammarError
from .netprog import (Command, Dec, Gosub, Goto, Halt, IfAllZeroGoto, Inc, NetProgram, NondetGoto, Return,
                      Subroutine)
from .petri import NetError, PetriNet


class ParseError(SyntaxError):
    def __init__(self, msg: str, line: int, col: int = 1, text: str = "", filename: str = "<text>"):
        super().__init__(msg, (filename, line, col, text))
        self.line, self.col = line, col

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.msg}"


class InvariantViolation(ValueError):
    pass


_COMMENT = re.compile(r"(^|\s)#.*$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = _COMMENT.sub("", raw)
        if line.strip():
            yield no, raw, line


def _ms(text: str, no: int, raw: str) -> Multiset:
    try:
        return parse_multiset(text)
    except ValueError as exc:
        raise ParseError(str(exc), no, raw.find(text) + 1, raw) from None


# nets

_PLACE = re.compile(r"^place\s+(\S+)(?:\s+init=(\d+))?\s*$")
_TRANS = re.compile(r"^trans\s+(\S+)\s+in\s+(\{[^}]*\})\s+out\s+(\{[^}]*\})(?:\s+zero\s+(\{[^}]*\}))?\s*$")


def load_net(text: str, filename: str = "<net>") -> PetriNet:
    places: List[str] = []
    init: Dict[str, int] = {}
    trans: Dict[str, tuple] = {}
    for no, raw, line in _lines(text):
        s = line.strip()
        m = _PLACE.match(s)
        if m:
            places.append(m.group(1))
            if m.group(2):
                init[m.group(1)] = int(m.group(2))
            continue
        m = _TRANS.match(s)
        if m:
            name = m.group(1)
            if name in trans:
                raise ParseError(f"duplicate transition {name!r}", no, 1, raw, filename)
            zero = ()
            if m.group(4):
                body = m.group(4)[1:-1]
                zero = tuple(z.strip() for z in body.split(",") if z.strip())
            trans[name] = (_ms(m.group(2), no, raw), _ms(m.group(3), no, raw), zero)
            continue
        raise ParseError("expected 'place' or 'trans' declaration", no, 1, raw, filename)
    try:
        return PetriNet.build(places, trans, Multiset(init))
    except (NetError, ValueError) as exc:
        raise InvariantViolation(f"{filename}: {exc}") from None


def dump_net(net: PetriNet) -> str:
    out = []
    for p in net.places:
        n = net.init[p]
        out.append(f"place {p}" + (f" init={n}" if n else ""))
    for t in net.transitions:
        line = f"trans {t} in {format_multiset(net.I(t))} out {format_multiset(net.O(t))}"
        if net.Z(t):
            line += " zero {" + ", ".join(sorted(net.Z(t))) + "}"
        out.append(line)
    return "\n".join(out) + "\n"


# grammars

def load_grammar(text: str, filename: str = "<grammar>") -> Grammar:
    start = None
    variables: List[str] = []
    terminals: List[str] = []
    rules: List[Tuple[str, Tuple[str, ...]]] = []
    declared_vars = declared_terms = False
    for no, raw, line in _lines(text):
        s = line.strip()
        if "->" in s:
            head, _, rhs = s.partition("->")
            head = head.strip()
            if not head or " " in head:
                raise ParseError("production head must be a single variable", no, 1, raw, filename)
            for alt in rhs.split("|"):
                syms = tuple(alt.split())
                if not syms:
                    raise ParseError("empty alternative; write 'eps'", no, raw.find("->") + 3, raw, filename)
                rules.append((head, () if syms == ("eps",) else syms))
            continue
        word, _, rest = s.partition(" ")
        if word == "start":
            start = rest.strip()
        elif word == "variables":
            variables, declared_vars = rest.split(), True
        elif word == "terminals":
            terminals, declared_terms = rest.split(), True
        else:
            raise ParseError("expected 'start', 'variables', 'terminals' or a production", no, 1, raw, filename)
    if not declared_vars:
        variables = list(dict.fromkeys(h for h, _ in rules))
        if start and start not in variables:
            variables.insert(0, start)
    if not declared_terms:
        vs = set(variables)
        terminals = list(dict.fromkeys(s for _, b in rules for s in b if s not in vs))
    try:
        return Grammar(tuple(variables), tuple(terminals), tuple(rules), start)
    except GrammarError as exc:
        raise InvariantViolation(f"{filename}: {exc}") from None


def dump_grammar(g: Grammar) -> str:
    out = []
    if g.start is not None:
        out.append(f"start {g.start}")
    out.append("variables " + " ".join(g.variables))
    out.append("terminals " + " ".join(g.terminals))
    for head, body in g.productions:
        out.append(f"{head} -> " + (" ".join(body) if body else "eps"))
    return "\n".join(out) + "\n"


# programs

_SUB = re.compile(r"^sub\s+(\S+)\s+level\s+(\d+)\s*:\s*$")
_CMD = re.compile(r"^(\S+?)\s*:\s*(.*)$")
_INC = re.compile(r"^(\S+)\s*:=\s*(\S+)\s*([+-])\s*1$")
_IFZ = re.compile(r"^if\s*([^\s=]*)\s*=\s*0\s+then\s+goto\s+(\S+)$")
_GOTO = re.compile(r"^goto\s+(\S+)((?:\s+or\s+goto\s+\S+)*)$")


def _op(body: str):
    m = _INC.match(body)
    if m:
        x, y, sign = m.groups()
        if x != y:
            return None
        return Inc(x) if sign == "+" else Dec(x)
    m = _IFZ.match(body)
    if m:
        xs = tuple(c for c in m.group(1).split(",") if c)
        return IfAllZeroGoto(xs, m.group(2))
    m = _GOTO.match(body)
    if m:
        targets = (m.group(1),) + tuple(re.findall(r"goto\s+(\S+)", m.group(2)))
        return Goto(targets[0]) if len(targets) == 1 else NondetGoto(targets)
    parts = body.split()
    if len(parts) == 2 and parts[0] == "gosub":
        return Gosub(parts[1])
    if body == "return":
        return Return()
    if body == "halt":
        return Halt()
    return None


def load_program(text: str, filename: str = "<program>") -> NetProgram:
    counters: Tuple[str, ...] = ()
    entry = None
    subs: List[Tuple[str, int, List[Command]]] = []
    seen: Dict[str, int] = {}
    for no, raw, line in _lines(text):
        s = line.strip()
        if s.startswith("counters"):
            counters = tuple(s.split()[1:])
            continue
        if s.startswith("entry "):
            entry = s.split()[1]
            continue
        m = _SUB.match(s)
        if m:
            subs.append((m.group(1), int(m.group(2)), []))
            continue
        m = _CMD.match(s)
        if not m:
            raise ParseError("expected 'label: command'", no, 1, raw, filename)
        if not subs:
            raise ParseError("command outside any 'sub' block", no, 1, raw, filename)
        label, body = m.group(1), m.group(2).strip()
        if label in seen:
            raise ParseError(f"duplicate label {label!r} (first on line {seen[label]})", no,
                             raw.find(label) + 1, raw, filename)
        seen[label] = no
        op = _op(body)
        if op is None:
            raise ParseError(f"unrecognised command {body!r}", no, raw.find(body) + 1, raw, filename)
        subs[-1][2].append(Command(label, op))
    if not subs:
        raise ParseError("no subroutines", 1, 1, "", filename)
    return NetProgram(counters, tuple(Subroutine(n, lv, tuple(c)) for n, lv, c in subs), entry or subs[0][0])


def _fmt_op(op) -> str:
    if isinstance(op, Inc):
        return f"{op.counter} := {op.counter} + 1"
    if isinstance(op, Dec):
        return f"{op.counter} := {op.counter} - 1"
    if isinstance(op, IfAllZeroGoto):
        return f"if {','.join(op.counters)} = 0 then goto {op.target}"
    if isinstance(op, Goto):
        return f"goto {op.target}"
    if isinstance(op, NondetGoto):
        return " or ".join(f"goto {t}" for t in op.targets)
    if isinstance(op, Gosub):
        return f"gosub {op.sub}"
    if isinstance(op, Return):
        return "return"
    return "halt"


def dump_program(p: NetProgram) -> str:
    out = ["counters " + " ".join(p.counters) if p.counters else "counters", f"entry {p.entry}"]
    for s in p.subroutines:
        out.append(f"sub {s.name} level {s.level}:")
        out.extend(f"  {c.label}: {_fmt_op(c.op)}" for c in s.commands)
    return "\n".join(out) + "\n"


# instances

@dataclass(frozen=True)
class InstanceSpec:
    net: str
    grammar: str
    final: Multiset
    k: Optional[int] = None
    start: Optional[str] = None
    binds: Tuple[Tuple[str, str], ...] = ()
    init: Optional[Multiset] = None


def load_instance_spec(text: str, filename: str = "<instance>") -> InstanceSpec:
    vals: Dict[str, object] = {}
    binds: List[Tuple[str, str]] = []
    for no, raw, line in _lines(text):
        key, _, rest = line.strip().partition(" ")
        rest = rest.strip()
        if key in ("net", "grammar", "start"):
            vals[key] = rest
        elif key == "k":
            vals["k"] = int(rest)
        elif key in ("final", "init"):
            vals[key] = _ms(rest, no, raw)
        elif key == "bind":
            parts = rest.split()
            if len(parts) != 2:
                raise ParseError("expected 'bind <terminal> <transition>'", no, 1, raw, filename)
            binds.append((parts[0], parts[1]))
        else:
            raise ParseError(f"unknown key {key!r}", no, 1, raw, filename)
    for req in ("net", "grammar"):
        if req not in vals:
            raise ParseError(f"missing '{req}' line", 1, 1, "", filename)
    return InstanceSpec(vals["net"], vals["grammar"], vals.get("final", EMPTY), vals.get("k"),
                        vals.get("start"), tuple(binds), vals.get("init"))


def dump_instance_spec(spec: InstanceSpec) -> str:
    out = [f"net {spec.net}", f"grammar {spec.grammar}"]
    out += [f"bind {a} {t}" for a, t in spec.binds]
    if spec.k is not None:
        out.append(f"k {spec.k}")
    if spec.start is not None:
        out.append(f"start {spec.start}")
    if spec.init is not None:
        out.append(f"init {format_multiset(spec.init)}")
    out.append(f"final {format_multiset(spec.final)}")
    return "\n".join(out) + "\n"


def load_levels(text: str) -> Dict[str, int]:
    data = json.loads(text)
    if not isinstance(data, dict) or not all(isinstance(v, int) and v >= 0 for v in data.values()):
        raise InvariantViolation("a level map is a JSON object from place names to naturals")
    return data


def dump_levels(f: Dict[str, int]) -> str:
    return json.dumps(f, sort_keys=True, indent=2) + "\n"


def read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def parse_model(path: str, kind: Optional[str] = None):
    kind = kind or os.path.splitext(path)[1].lstrip(".")
    text = read(path)
    if kind == "pn":
        return load_net(text, path)
    if kind == "cfg":
        return load_grammar(text, path)
    if kind == "np":
        return load_program(text, path)
    if kind == "inst":
        return load_instance_spec(text, path)
    if kind == "json":
        return load_levels(text)
    raise ValueError(f"unknown model kind {kind!r}")


def load_instance(path: str):
    """Resolve an ``.inst`` file into a ``ProblemInstance`` (paths are relative to the file)."""
    from .oracle import ProblemInstance

    spec = parse_model(path, "inst")
    base = os.path.dirname(os.path.abspath(path))
    net = parse_model(os.path.join(base, spec.net), "pn")
    g = parse_model(os.path.join(base, spec.grammar), "cfg")
    if spec.binds:
        g = g.rename_terminals(dict(spec.binds))
    if spec.init is not None:
        net = net.with_init(spec.init)
    start = spec.start or g.start
    if start is None:
        raise InvariantViolation(f"{path}: no start variable given")
    return ProblemInstance(net, g, start, spec.k, spec.final)
