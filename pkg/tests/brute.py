"""Reference implementations used only by the tests: slow, obviously correct."""

from collections import deque


def brute_language(g, a, max_len, k=None):
    """Words of length <= max_len derivable from ``a`` with at most ``k`` variables per form.

    Explores every rewrite position (not just leftmost).  With ``k`` None the
    variable bound is max_len + 2, which is enough for the small grammars used
    here; callers compare only up to that size.
    """
    vs = set(g.variables)
    bound = k if k is not None else max_len + 2
    heads = {}
    for h, b in g.productions:
        heads.setdefault(h, []).append(b)
    seen = {(a,)}
    q = deque([(a,)])
    words = set()
    while q:
        form = q.popleft()
        nvars = sum(1 for s in form if s in vs)
        if nvars == 0:
            words.add(form)
            continue
        for i, s in enumerate(form):
            if s not in vs:
                continue
            for body in heads.get(s, ()):
                new = form[:i] + body + form[i + 1:]
                nv = sum(1 for x in new if x in vs)
                if nv > bound or len(new) - nv > max_len or len(new) > max_len + bound:
                    continue
                if new not in seen:
                    seen.add(new)
                    q.append(new)
    return words


def dyck():
    from cfltrace.grammar import Grammar
    return Grammar.from_rules([("S", ()), ("S", ("S", "S")), ("S", ("A", "C")),
                               ("C", ("S", "B")), ("A", ("a",)), ("B", ("b",))], start="S")


def brute_reach(inst, budget):
    """Fire every word of the language up to the longest possible run of the net.

    Returns None when the net admits unbounded runs.
    """
    from cfltrace.petri import fire_word, max_run_length
    n = max_run_length(inst.net, inst.net.init, budget)
    if n is None:
        return None
    words = brute_language(inst.grammar, inst.start, n, inst.k)
    return any(fire_word(inst.net, inst.net.init, w) == inst.m_final for w in words)


def small_cases(seed, count, **kw):
    import random
    from cfltrace.gen import traversal_case
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        case = traversal_case(rng, **kw)
        for m, m2 in rng.sample(case.pairs, min(4, len(case.pairs))):
            out.append(case.instance(m, m2))
    return out
