"""Context-free grammars, index-bounded derivations and the allowance annotation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .core import BudgetExceeded, SearchBudget, Word

Production = Tuple[str, Tuple[str, ...]]


class GrammarError(ValueError):
    pass


class NotRestricted(GrammarError):
    pass


class InvalidDerivation(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    variables: Tuple[str, ...]
    terminals: Tuple[str, ...]
    productions: Tuple[Production, ...]
    start: Optional[str] = None

    def __post_init__(self):
        vs, ts = set(self.variables), set(self.terminals)
        if vs & ts:
            raise GrammarError(f"symbols both variable and terminal: {sorted(vs & ts)}")
        for head, body in self.productions:
            if head not in vs:
                raise GrammarError(f"undeclared head {head!r}")
            for s in body:
                if s not in vs and s not in ts:
                    raise GrammarError(f"undeclared symbol {s!r} in {head} -> {' '.join(body)}")
        if self.start is not None and self.start not in vs:
            raise GrammarError(f"undeclared start {self.start!r}")

    @classmethod
    def from_rules(cls, rules: Iterable[Tuple[str, Sequence[str]]], terminals: Iterable[str] = (),
                   start: Optional[str] = None, variables: Iterable[str] = ()) -> "Grammar":
        """Heads (and ``variables``) become variables; every other body symbol a terminal."""
        rules = [(h, tuple(b)) for h, b in rules]
        vs = list(dict.fromkeys(list(variables) + [h for h, _ in rules]))
        ts = list(dict.fromkeys(terminals))
        for _, b in rules:
            for s in b:
                if s not in vs and s not in ts:
                    ts.append(s)
        return cls(tuple(vs), tuple(ts), tuple(rules), start)

    @property
    def restricted(self) -> bool:
        vs, ts = set(self.variables), set(self.terminals)
        for _, body in self.productions:
            if len(body) == 0:
                continue
            if len(body) == 1 and body[0] in ts:
                continue
            if len(body) == 2 and body[0] in vs and body[1] in vs:
                continue
            return False
        return True

    def by_head(self) -> Dict[str, List[Production]]:
        out: Dict[str, List[Production]] = {v: [] for v in self.variables}
        for p in self.productions:
            out[p[0]].append(p)
        return out

    def with_start(self, start: str) -> "Grammar":
        return Grammar(self.variables, self.terminals, self.productions, start)

    def rename_terminals(self, mapping: Mapping[str, str]) -> "Grammar":
        ts = tuple(dict.fromkeys(mapping.get(t, t) for t in self.terminals))
        prods = tuple((h, tuple(mapping.get(s, s) if s in self.terminals else s for s in b))
                      for h, b in self.productions)
        return Grammar(self.variables, ts, prods, self.start)


@dataclass(frozen=True)
class AnnotatedVariable:
    base: str
    allowance: int

    @property
    def name(self) -> str:
        return f"{self.base}[{self.allowance}]"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, name: str) -> "AnnotatedVariable":
        m = re.fullmatch(r"(.+)\[(\d+)\]", name)
        if not m:
            raise ValueError(f"not an annotated variable: {name!r}")
        return cls(m.group(1), int(m.group(2)))


def annotated(base: str, i: int) -> str:
    return f"{base}[{i}]"


@dataclass
class Derivation:
    """Sentential forms ``forms[0] => forms[1] => ...`` with the rewrite used at each step."""

    forms: List[Tuple[str, ...]]
    steps: List[Tuple[Production, int]] = field(default_factory=list)

    @property
    def result(self) -> Tuple[str, ...]:
        return self.forms[-1]


def variable_count(form: Sequence[str], variables) -> int:
    return sum(1 for s in form if s in variables)


def check_derivation_index(d: Derivation, grammar: Optional[Grammar] = None) -> int:
    """Maximum number of variables in any form of ``d``; validates every step."""
    if not d.forms:
        raise InvalidDerivation("empty derivation")
    if len(d.steps) != len(d.forms) - 1:
        raise InvalidDerivation("need exactly one step per rewrite")
    prods = set(grammar.productions) if grammar is not None else None
    # without the grammar, the symbols rewritten somewhere are the variables
    variables = set(grammar.variables) if grammar is not None else {p[0] for p, _ in d.steps}
    for i, ((head, body), pos) in enumerate(d.steps):
        if prods is not None and (head, body) not in prods:
            raise InvalidDerivation(f"step {i}: {head} -> {' '.join(body)} is not a production")
        u, v = d.forms[i], d.forms[i + 1]
        if not (0 <= pos < len(u)) or u[pos] != head:
            raise InvalidDerivation(f"step {i}: no {head} at position {pos}")
        if v != u[:pos] + body + u[pos + 1:]:
            raise InvalidDerivation(f"step {i}: forms are not related by the rewrite")
    return max(variable_count(f, variables) for f in d.forms)


def _min_yield(g: Grammar) -> Dict[str, float]:
    """Shortest terminal yield of each variable (inf when unproductive)."""
    inf = float("inf")
    ts = set(g.terminals)
    best = {v: inf for v in g.variables}
    changed = True
    while changed:
        changed = False
        for head, body in g.productions:
            n = 0
            for s in body:
                n += 1 if s in ts else best[s]
            if n < best[head]:
                best[head] = n
                changed = True
    return best


def is_empty_language(g: Grammar, a: str) -> bool:
    return _min_yield(g)[a] == float("inf")


def enum_language(g: Grammar, a: str, max_len: int, k: Optional[int] = None,
                  budget: Optional[SearchBudget] = None) -> Set[Word]:
    """Words of ``L(a)`` (or of the ``k``-index approximation) of length at most ``max_len``.

    Raises ``BudgetExceeded`` carrying the partial set when the derivation-step
    cap is hit; the partial set must not be treated as complete.
    """
    if k is None:
        if a not in g.variables:
            raise GrammarError(f"unknown variable {a!r}")
        return set(_enum_fixpoint(g, a, max_len, budget or SearchBudget(), derivations=False))
    if a not in g.variables:
        raise GrammarError(f"unknown variable {a!r}")
    if k < 1:
        return set()
    return set(_fixpoint_tables(g, a, max_len, budget or SearchBudget(), k)[a])


def enum_language_certified(g: Grammar, a: str, max_len: int, k: Optional[int] = None,
                            budget: Optional[SearchBudget] = None) -> Dict[Word, Derivation]:
    if a not in g.variables:
        raise GrammarError(f"unknown variable {a!r}")
    budget = budget or SearchBudget()
    if k is None:
        return _enum_fixpoint(g, a, max_len, budget)
    if k < 1:
        return {}
    words = _fixpoint_tables(g, a, max_len, budget, k)
    return {w: _ordered_derivation(g, words, a, w) for w in words[a]}


def _reachable_variables(g: Grammar, a: str) -> Set[str]:
    heads = g.by_head()
    seen, todo = {a}, [a]
    while todo:
        for _, body in heads.get(todo.pop(), ()):
            for s in body:
                if s in heads and s not in seen:
                    seen.add(s)
                    todo.append(s)
    return seen


def _enum_fixpoint(g: Grammar, a: str, max_len: int, budget: SearchBudget,
                   derivations: bool = True) -> Dict[Word, Optional[Derivation]]:
    words = _fixpoint_tables(g, a, max_len, budget)
    if not derivations:
        return dict.fromkeys(words[a])
    return {w: _leftmost_derivation(g, words, a, w) for w in words[a]}


def _need(child_needs: List[int]) -> int:
    # fewest simultaneous variables to finish a node: children are derived one at a
    # time, cheapest first, while the rest wait as single variables
    if not child_needs:
        return 1
    ds = sorted(child_needs, reverse=True)
    return max(d + j for j, d in enumerate(ds))


def _fixpoint_tables(g: Grammar, a: str, max_len: int, budget: SearchBudget,
                     k: Optional[int] = None) -> Dict[str, Dict[Word, tuple]]:
    """Per-variable tables ``word -> (production index, parts, need)``.

    Least fixpoint stratified by length: words of length n need shorter words,
    plus same-length words of one body symbol when the rest derives eps.  With
    ``k`` set, ``need`` is the smallest index of a derivation tree seen so far
    and entries above ``k`` are dropped; otherwise it is left at 0.
    """
    ts = set(g.terminals)
    live = _reachable_variables(g, a)
    low = _min_yield(g)
    prods = [(idx, h, b) for idx, (h, b) in enumerate(g.productions) if h in live]
    words: Dict[str, Dict[Word, tuple]] = {v: {} for v in g.variables}
    by_len: Dict[str, List[List[Word]]] = {v: [[] for _ in range(max_len + 1)] for v in g.variables}
    tail_low = {}
    for _, _, body in prods:
        acc = 0
        for i in range(len(body), -1, -1):
            tail_low[body, i] = acc
            if i:
                acc += 1 if body[i - 1] in ts else low[body[i - 1]]

    work = 0

    def splits(body, i, n, cap):
        # (word, parts) for body[i:] deriving n letters, each variable part at most cap long
        nonlocal work
        if i == len(body):
            return [((), ())] if n == 0 else []
        if tail_low[body, i] > n:
            return []
        s = body[i]
        if s in ts:
            return [((s,) + w, ((s,),) + parts) for w, parts in splits(body, i + 1, n - 1, cap)] if n else []
        out = []
        for l in range(min(n, cap) + 1):
            opts = by_len[s][l]
            if not opts:
                continue
            rest = splits(body, i + 1, n - l, cap)
            work += len(opts) * len(rest)
            if work > budget.derivation_steps * 10:
                raise BudgetExceeded("fixpoint work cap", set(words[a]))
            for u in opts:
                for w, parts in rest:
                    out.append((u + w, (u,) + parts))
        return out

    def need_of(body, parts) -> int:
        if len(body) == 2 and body[0] not in ts and body[1] not in ts:
            x, y = words[body[0]][parts[0]][2], words[body[1]][parts[1]][2]
            return max(x, y) if x != y else x + 1
        ns = [words[s][u][2] for s, u in zip(body, parts) if s not in ts]
        if len(ns) == 1:
            return ns[0]
        if len(ns) == 2:
            x, y = ns
            return max(x, y) if x != y else x + 1
        return _need(ns)

    def offer(idx, head, body, w, parts, n) -> bool:
        need = 0
        if k is not None:
            if w in words[head] and words[head][w][2] <= 1:
                return False
            need = need_of(body, parts)
            if need > k:
                return False
        old = words[head].get(w)
        if old is None:
            by_len[head][n].append(w)
        elif old[2] <= need:
            return False
        words[head][w] = (idx, parts, need)
        return True

    # length 0: everything depends on everything, plain iteration
    changed = True
    while changed:
        changed = False
        for idx, head, body in prods:
            for w, parts in splits(body, 0, 0, 0):
                changed |= offer(idx, head, body, w, parts, 0)

    # a same-length word passes up only through a body whose other symbols all derive eps
    units: Dict[str, List[tuple]] = {}
    for idx, head, body in prods:
        for i, s in enumerate(body):
            if s not in ts and all(o not in ts and () in words[o] for j, o in enumerate(body) if j != i):
                units.setdefault(s, []).append((idx, head, body, i))

    for n in range(1, max_len + 1):
        todo = []
        for idx, head, body in prods:
            for w, parts in splits(body, 0, n, n - 1):
                if offer(idx, head, body, w, parts, n):
                    todo.append((head, w))
        while todo:
            sym, w = todo.pop()
            for idx, head, body, i in units.get(sym, ()):
                parts = tuple(w if j == i else () for j in range(len(body)))
                if offer(idx, head, body, w, parts, n):
                    todo.append((head, w))
    return words


def _leftmost_derivation(g: Grammar, words, a: str, w: Word) -> Derivation:
    ts = set(g.terminals)
    forms = [(a,)]
    steps = []
    # stack of pending (symbol, target word) in left-to-right order
    form: List[Tuple[str, Optional[Word]]] = [(a, w)]
    while True:
        pos = next((i for i, (s, _) in enumerate(form) if s not in ts), None)
        if pos is None:
            break
        sym, target = form[pos]
        idx, parts, _ = words[sym][target]
        prod = g.productions[idx]
        expansion = [(s, part if s not in ts else None) for s, part in zip(prod[1], parts)]
        form = form[:pos] + expansion + form[pos + 1:]
        steps.append((prod, pos))
        forms.append(tuple(s for s, _ in form))
    return Derivation(forms, steps)


def _ordered_derivation(g: Grammar, words, a: str, w: Word) -> Derivation:
    # expand each node's variable children one at a time, cheapest tree first, so
    # the variable count never exceeds the recorded need
    ts = set(g.terminals)
    form: List[Tuple[str, Optional[Word]]] = [(a, w)]
    forms = [(a,)]
    steps = []

    def expand(pos):
        sym, target = form[pos]
        idx, parts, _ = words[sym][target]
        prod = g.productions[idx]
        form[pos:pos + 1] = [(s, part if s not in ts else None) for s, part in zip(prod[1], parts)]
        steps.append((prod, pos))
        forms.append(tuple(s for s, _ in form))
        order = sorted((words[s][u][2], j) for j, (s, u) in enumerate(zip(prod[1], parts)) if s not in ts)
        done = set()
        for _, j in order:
            offset = sum(len(parts[i]) if i in done else 1 for i in range(j))
            expand(pos + offset)
            done.add(j)

    expand(0)
    return Derivation(forms, steps)


def derive_word(g: Grammar, a: str, w: Word, k: Optional[int] = None,
                budget: Optional[SearchBudget] = None) -> Optional[Derivation]:
    """A derivation of ``w`` from ``a`` (of index at most ``k``), or None."""
    budget = budget or SearchBudget()
    if k is None:
        w = tuple(w)
        words = _fixpoint_tables(g, a, len(w), budget)
        return _leftmost_derivation(g, words, a, w) if w in words[a] else None
    w = tuple(w)
    if k < 1:
        return None
    words = _fixpoint_tables(g, a, len(w), budget, k)
    return _ordered_derivation(g, words, a, w) if w in words[a] else None


def find_preimage(g: Grammar, a: str, x: Sequence[str], theta: Iterable[str], max_pad: int,
                  max_vars: int, budget: Optional[SearchBudget] = None) -> Optional[Word]:
    """A word of ``L(a)`` whose restriction to ``theta`` is ``x``, with the fewest other letters.

    Leftmost derivations keeping at most ``max_vars`` variables and ``max_pad``
    letters outside ``theta`` are explored cheapest first.  None means no such
    word exists within those two bounds.
    """
    import heapq

    budget = budget or SearchBudget()
    x = tuple(x)
    theta = set(theta)
    vs = set(g.variables)
    heads = g.by_head()
    low = _min_yield(g)
    if low[a] == float("inf"):
        return None

    def settle(i, pad, word, rest):
        # consume leading terminals; None when they contradict x or the bounds
        j = 0
        while j < len(rest) and rest[j] not in vs:
            s = rest[j]
            if s in theta:
                if i >= len(x) or x[i] != s:
                    return None
                i += 1
            else:
                pad += 1
            word += (s,)
            j += 1
        rest = rest[j:]
        later_pad = sum(1 for s in rest if s not in vs and s not in theta)
        later_hit = sum(1 for s in rest if s in theta)
        if pad + later_pad > max_pad or i + later_hit > len(x):
            return None
        if sum(1 for s in rest if s in vs) > max_vars:
            return None
        return i, pad, word, rest

    first = settle(0, 0, (), (a,))
    heap = [(0, 0, first)] if first else []
    seen = set()
    tick = 0
    while heap:
        _, _, (i, pad, word, rest) = heapq.heappop(heap)
        if not rest:
            if i == len(x):
                return word
            continue
        if (i, pad, rest) in seen:
            continue
        seen.add((i, pad, rest))
        if len(seen) > budget.derivation_steps:
            raise BudgetExceeded("derivation-step cap")
        for _, body in heads.get(rest[0], ()):
            nxt = settle(i, pad, word, body + rest[1:])
            if nxt is not None and low[rest[0]] != float("inf"):
                tick += 1
                heapq.heappush(heap, (nxt[1], tick, nxt))
    return None


def annotate(g: Grammar, k: int) -> Grammar:
    """The allowance-annotated grammar: variables ``X[i]`` for ``0 <= i <= k``.

    Variables left without productions (``X[0]`` for binary-only ``X``) are kept.
    """
    if not g.restricted:
        raise NotRestricted("annotation needs productions of the form YZ, a or eps")
    if k < 0:
        raise ValueError("k must be non-negative")
    vs = set(g.variables)
    variables = tuple(annotated(x, i) for x in g.variables for i in range(k + 1))
    prods: List[Production] = []
    for head, body in g.productions:
        if len(body) == 2 and body[0] in vs:
            y, z = body
            for i in range(1, k + 1):
                prods.append((annotated(head, i), (annotated(y, i - 1), annotated(z, i))))
                prods.append((annotated(head, i), (annotated(y, i), annotated(z, i - 1))))
        else:
            for i in range(k + 1):
                prods.append((annotated(head, i), body))
    start = annotated(g.start, k) if g.start is not None else None
    return Grammar(variables, g.terminals, tuple(prods), start)


def _fresh(base: str, taken: Set[str]) -> str:
    n = 1
    while f"{base}_{n}" in taken:
        n += 1
    name = f"{base}_{n}"
    taken.add(name)
    return name


def to_restricted(g: Grammar) -> Tuple[Grammar, Dict[str, str]]:
    """Equivalent grammar whose bodies are ``YZ``, ``a`` or ``eps``.

    Promotes terminals inside long bodies to fresh variables, binarizes with one
    fresh variable per split and removes unit productions.  Languages of the
    original variables are preserved; their index may grow.
    """
    identity = {v: v for v in g.variables}
    if g.restricted:
        return g, identity
    vs = set(g.variables)
    ts = set(g.terminals)
    taken = vs | ts
    variables = list(g.variables)
    term_var: Dict[str, str] = {}
    step1: List[Production] = []
    extra: List[Production] = []
    for head, body in g.productions:
        if len(body) >= 2:
            new_body = []
            for s in body:
                if s in ts:
                    if s not in term_var:
                        term_var[s] = _fresh(f"T_{s}", taken)
                        variables.append(term_var[s])
                        extra.append((term_var[s], (s,)))
                    new_body.append(term_var[s])
                else:
                    new_body.append(s)
            body = tuple(new_body)
        step1.append((head, body))
    step1.extend(extra)

    step2: List[Production] = []
    for head, body in step1:
        cur = head
        while len(body) > 2:
            nxt = _fresh(head, taken)
            variables.append(nxt)
            step2.append((cur, (body[0], nxt)))
            cur, body = nxt, body[1:]
        step2.append((cur, body))

    all_vars = set(variables)
    units = {v: {v} for v in variables}
    changed = True
    while changed:
        changed = False
        for head, body in step2:
            if len(body) == 1 and body[0] in all_vars:
                for v in variables:
                    if head in units[v] and body[0] not in units[v]:
                        units[v].add(body[0])
                        changed = True
    step3: List[Production] = []
    seen = set()
    for v in variables:
        for head, body in step2:
            if head in units[v] and not (len(body) == 1 and body[0] in all_vars):
                p = (v, body)
                if p not in seen:
                    seen.add(p)
                    step3.append(p)
    out = Grammar(tuple(variables), g.terminals, tuple(step3), g.start)
    assert out.restricted
    return out, identity
