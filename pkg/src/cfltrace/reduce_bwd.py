"""Reachability in a net with weak tests, reduced to plain-net reachability along a finite-index CFL.

Each testable place ``s_i`` gets a shadow place ``r_i`` filled by ``p_i`` and
drained by ``c_i``.  The trace language keeps ``s_i + r_i`` constant, so a
transition testing ``s_1 .. s_l`` for zero may only fire where the language
has all of ``s_1, r_1 .. s_l, r_l`` empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .core import EMPTY, BudgetExceeded, Multiset, SearchBudget, Verdict, Word
from .grammar import Grammar, enum_language
from .netprog import NotWeak
from .oracle import ProblemInstance, reach_along
from .petri import PetriNet, ReachResult, fire_word, is_weak, reachable_markings


def _fresh(base: str, taken) -> str:
    name, n = base, 0
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    return name


@dataclass(frozen=True)
class NormalizedPNW:
    net: PetriNet
    f: Dict[str, int]
    n: int
    order: Tuple[str, ...]  # s_1, ..., s_n tested prefix, then s_{n+1} holding the start token, then the rest
    m_final: Multiset = EMPTY
    origin: Dict[str, Optional[str]] = field(default_factory=dict)  # normalized transition -> original (None for gadgets)
    gadget: bool = False

    @property
    def tested(self) -> Tuple[str, ...]:
        return self.order[:self.n]

    def level(self, t: str) -> int:
        return len(self.net.Z(t))

    def project_original(self, w: Sequence[str]) -> Word:
        """Map a word over normalized transitions to the original net, merging split halves."""
        out = []
        for t in w:
            o = self.origin.get(t, t)
            if o is not None and not t.endswith("#b"):
                out.append(o)
        return tuple(out)


def _tested_prefix(net: PetriNet, f: Mapping[str, int]) -> Tuple[List[str], int]:
    order = sorted(net.places, key=lambda p: (f[p], p))
    n = max((len(net.Z(t)) for t in net.transitions), default=0)
    return order, n


def _is_normal(net: PetriNet, f: Mapping[str, int], m_final: Multiset) -> bool:
    if m_final.total() or net.init.total() != 1:
        return False
    tested = set().union(*(net.Z(t) for t in net.transitions)) if net.transitions else set()
    if next(iter(net.init.support())) in tested:
        return False
    return all(net.O(t)[s] == 0 for t in net.transitions for s in net.Z(t))


def normalize_pnw(net: PetriNet, f: Mapping[str, int], m_final: Multiset) -> NormalizedPNW:
    """Bring a net with weak tests to single-token start, empty target and test-free outputs on tested places.

    Unless the input already has that shape, a ``run`` token guards every
    original transition, ``start -> m_init + run`` opens the run,
    ``m_final + run -> empty`` closes it, and a transition producing onto a
    place it tests is split in two halves joined by a buffer place; since the
    first half takes the run token, nothing interleaves.
    """
    ok, bad = is_weak(net, f)
    if not ok:
        raise NotWeak(f"tests not downward closed: {sorted({t for _, _, t in bad})}", bad)
    if _is_normal(net, f, m_final):
        order, n = _tested_prefix(net, f)
        start = next(iter(net.init.support()))
        rest = [p for p in order[n:] if p != start]
        return NormalizedPNW(net, dict(f), n, tuple(order[:n]) + (start,) + tuple(rest), m_final,
                             {t: t for t in net.transitions}, False)
    taken = set(net.places) | set(net.transitions)
    run = _fresh("run", taken)
    taken.add(run)
    start = _fresh("start", taken)
    taken.add(start)
    tested = set().union(*(net.Z(t) for t in net.transitions))
    top = max((f[p] for p in tested), default=-1) + 1
    places = list(net.places) + [run, start]
    trans: Dict[str, tuple] = {}
    origin: Dict[str, Optional[str]] = {}
    t_init = _fresh("t_init", taken)
    taken.add(t_init)
    trans[t_init] = ({start: 1}, net.init + Multiset({run: 1}))
    origin[t_init] = None
    for t in net.transitions:
        I = net.I(t) + Multiset({run: 1})
        O = net.O(t) + Multiset({run: 1})
        Z = tuple(sorted(net.Z(t)))
        if any(net.O(t)[s] for s in Z):
            buf = _fresh(f"buf_{t}", taken)
            taken.add(buf)
            places.append(buf)
            a, b = _fresh(f"{t}#a", taken), _fresh(f"{t}#b", taken)
            taken.update((a, b))
            trans[a] = (I, {buf: 1}, Z)
            trans[b] = ({buf: 1}, O)
            origin[a], origin[b] = t, t
        else:
            trans[t] = (I, O, Z)
            origin[t] = t
    t_fin = _fresh("t_fin", taken)
    trans[t_fin] = (m_final + Multiset({run: 1}), {})
    origin[t_fin] = None
    new = PetriNet.build(places, trans, Multiset({start: 1}))
    g = {p: (f[p] if p in tested else top) for p in places}
    order, n = _tested_prefix(new, g)
    rest = [p for p in order[n:] if p != start]
    return NormalizedPNW(new, g, n, tuple(order[:n]) + (start,) + tuple(rest), EMPTY, origin, True)


@dataclass(frozen=True)
class WidgetNet:
    net: PetriNet
    shadow: Tuple[str, ...]   # r_1 .. r_n
    produce: Tuple[str, ...]  # p_1 .. p_n
    consume: Tuple[str, ...]  # c_1 .. c_n
    base: Tuple[str, ...]     # transitions of the normalized net


def build_nprime(np: NormalizedPNW) -> WidgetNet:
    net = np.net
    taken = set(net.places) | set(net.transitions)
    r, p, c = [], [], []
    for i in range(1, np.n + 1):
        for lst, stem in ((r, "r"), (p, "p"), (c, "c")):
            name = _fresh(f"{stem}{i}", taken)
            taken.add(name)
            lst.append(name)
    trans = {t: (net.I(t), net.O(t)) for t in net.transitions}
    for ri, pi, ci in zip(r, p, c):
        trans[pi] = ({}, {ri: 1})
        trans[ci] = ({ri: 1}, {})
    wn = PetriNet.build(list(net.places) + r, trans, net.init)
    return WidgetNet(wn, tuple(r), tuple(p), tuple(c), tuple(net.transitions))


def build_words(np: NormalizedPNW, wp: WidgetNet, t: str) -> Tuple[Word, Word]:
    """``u`` refills the shadows of what ``t`` consumed, ``v`` drains the shadows of what it produces."""
    u: List[str] = []
    v: List[str] = []
    for i, s in enumerate(np.tested):
        u += [wp.produce[i]] * np.net.I(t)[s]
        v += [wp.consume[i]] * np.net.O(t)[s]
    return tuple(u), tuple(v)


def trace_words(np: NormalizedPNW, wp: WidgetNet) -> Dict[int, List[Word]]:
    """``T_l``: the words ``v t u`` of the transitions testing exactly ``s_1 .. s_l``."""
    out: Dict[int, List[Word]] = {l: [] for l in range(np.n + 1)}
    for t in np.net.transitions:
        u, v = build_words(np, wp, t)
        out[np.level(t)].append(v + (t,) + u)
    return out


def tower_variable(l: int) -> str:
    return f"A{l}"


def build_trace_grammar(np: NormalizedPNW, wp: WidgetNet) -> Tuple[Grammar, str, int]:
    T = trace_words(np, wp)
    rules = []
    for l in range(np.n + 1):
        a = tower_variable(l)
        rules.append((a, ()))
        rules.extend((a, w + (a,)) for w in T[l])
        if l:
            d = f"D{l}"
            rules.append((a, (d, a)))
            rules.append((d, (wp.produce[l - 1], d, wp.consume[l - 1])))
            rules.append((d, (tower_variable(l - 1),)))
    start = tower_variable(np.n)
    g = Grammar.from_rules(rules, terminals=wp.net.transitions, start=start)
    return g, start, np.n + 1


def tower_member(np: NormalizedPNW, wp: WidgetNet, level: int, w: Sequence[str]) -> bool:
    """Direct membership test for ``L_level`` from its inductive definition."""
    w = tuple(w)
    T = {l: set(ws) for l, ws in trace_words(np, wp).items()}
    lens = {l: sorted({len(x) for x in ws}) for l, ws in T.items()}

    @lru_cache(maxsize=None)
    def star(l, i, j):
        return i == j or any(unit(l, i, m) and star(l, m, j) for m in range(i + 1, j + 1))

    @lru_cache(maxsize=None)
    def unit(l, i, j):
        # a nonempty factor: a word of T_l, or p_l^a z c_l^a with z in L_{l-1}
        if j - i in lens[l] and w[i:j] in T[l]:
            return True
        if l == 0:
            return False
        p, c = wp.produce[l - 1], wp.consume[l - 1]
        a = 0
        while i + a <= j - a:
            if star(l - 1, i + a, j - a):
                return True
            if i + a == j - a or w[i + a] != p or w[j - a - 1] != c:
                return False
            a += 1
        return False

    return star(level, 0, len(w))


def shadow_sums(np: NormalizedPNW, wp: WidgetNet, m: Multiset) -> Tuple[int, ...]:
    return tuple(m[s] + m[r] for s, r in zip(np.tested, wp.shadow))


def certified_caps(np: NormalizedPNW, wp: WidgetNet, budget: SearchBudget) -> Optional[Tuple[int, int]]:
    """Token and pending-terminal caps within which some witness exists if any does.

    Needs the normalized net to have finitely many reachable markings: with
    ``tmax`` the largest token count seen, each shadow place needs at most
    ``tmax`` tokens of padding and at most that many ``c`` are pending per level.
    """
    markings, exact = reachable_markings(np.net, budget)
    if not exact:
        return None
    tmax = max(m.total() for m in markings)
    net = np.net
    max_i = max((net.I(t).total() for t in net.transitions), default=0)
    max_o = max((net.O(t).total() for t in net.transitions), default=0)
    longest = max((len(w) for ws in trace_words(np, wp).values() for w in ws), default=0)
    return (np.n + 1) * tmax + max_i + max_o, np.n * tmax + longest


@dataclass
class BackwardArtifact:
    normalized: NormalizedPNW
    widget: WidgetNet
    grammar: Grammar
    start: str
    index: int
    instance: ProblemInstance
    caps: Optional[Tuple[int, int]] = None


def backward_artifact(net: PetriNet, f: Mapping[str, int], m_final: Multiset,
                      budget: SearchBudget) -> BackwardArtifact:
    np = normalize_pnw(net, f, m_final)
    wp = build_nprime(np)
    g, start, index = build_trace_grammar(np, wp)
    inst = ProblemInstance(wp.net, g, start, index, EMPTY)
    return BackwardArtifact(np, wp, g, start, index, inst, certified_caps(np, wp, budget))


def index_claim_holds(art: BackwardArtifact, max_len: int, budget: SearchBudget) -> bool:
    """Bounded check that the trace grammar loses nothing under its index bound."""
    g, a = art.grammar, art.start
    try:
        return enum_language(g, a, max_len, art.index, budget) == enum_language(g, a, max_len, None, budget)
    except BudgetExceeded:
        return False


def backward_decide(net: PetriNet, f: Mapping[str, int], m_final: Multiset, budget: SearchBudget,
                    engine: str = "summary", claim_len: int = 4) -> Tuple[ReachResult, BackwardArtifact]:
    """Decide ``m_final`` reachability in a net with weak tests through the widget net.

    ``engine="summary"`` runs the oracle without an index bound, which is
    sound because the trace grammar derives nothing beyond its index bound;
    that claim is re-checked on words up to ``claim_len`` and the indexed
    product search is used instead if the check fails.  ``engine="indexed"``
    always uses the product search.
    """
    art = backward_artifact(net, f, m_final, budget)
    b = budget
    if art.caps is not None:
        tok, pend = art.caps
        b = budget.replace(tokens=max(budget.tokens, tok), word_len=max(budget.word_len, pend))
    inst = art.instance
    if engine == "summary" and index_claim_holds(art, claim_len, budget):
        inst = replace(inst, k=None)
    res = reach_along(inst, b, caps_sufficient=art.caps is not None)
    res.extra["engine"] = "summary" if inst.k is None else "indexed"
    if res.reached:
        w = art.normalized.project_original(tuple(t for t in res.witness if t in art.widget.base))
        res.extra["projected"] = w
        assert fire_word(net, net.init, w) == m_final
    return res, art
