"""Desk-scale experiment suites shared by scripts/ and the acceptance tests.

Each suite takes a frozen config and returns tallies; nothing here prints.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .core import BudgetExceeded, Multiset, SearchBudget, parse_multiset
from .formats import (dump_grammar, dump_instance_spec, dump_levels, dump_net, dump_program,
                      load_grammar, load_instance_spec, load_levels, load_net, load_program, read)
from .gen import GrammarShape, TraversalCase, traversal_case, random_restricted_grammar
from .grammar import annotate, annotated, enum_language, find_preimage
from .netprog import compile_program, run_program
from .oracle import reach_along, words_along
from .petri import PetriNet, bounded_reach, fire_word, is_weak, reachable_markings
from .reduce_bwd import (BackwardArtifact, backward_decide, shadow_sums, tower_member,
                         tower_variable)
from .reduce_fwd import forward_decide
from .traverse import run_traverse

ROOT = Path(__file__).resolve().parents[2]
CORPUS = ROOT / "corpus"


@dataclass
class Tally:
    passed: int = 0
    failed: int = 0
    inconclusive: int = 0
    failures: List[str] = field(default_factory=list)

    def add(self, ok: Optional[bool], what: str = "") -> None:
        if ok is None:
            self.inconclusive += 1
        elif ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.failures) < 20:
                self.failures.append(what)

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.inconclusive

    @property
    def conclusive_rate(self) -> float:
        return 1.0 if not self.total else (self.passed + self.failed) / self.total

    def as_dict(self) -> dict:
        return {"passed": self.passed, "failed": self.failed, "inconclusive": self.inconclusive,
                "failures": list(self.failures)}


# index bounds and annotation

@dataclass(frozen=True)
class AnnotationConfig:
    grammars: int = 20
    ks: Tuple[int, ...] = (0, 1, 2, 3)
    max_len: int = 8
    seed: int = 1
    shape: GrammarShape = GrammarShape()
    budget: SearchBudget = SearchBudget(derivation_steps=2_000_000)


def annotation_suite(cfg: AnnotationConfig = AnnotationConfig()) -> Tally:
    """Words of ``X[k]`` in the annotated grammar against ``(k+1)``-index words of ``X``."""
    rng = random.Random(cfg.seed)
    tally = Tally()
    for gi in range(cfg.grammars):
        g = random_restricted_grammar(rng, cfg.shape)
        for k in cfg.ks:
            gk = annotate(g, k)
            for x in g.variables:
                try:
                    a = enum_language(gk, annotated(x, k), cfg.max_len, None, cfg.budget)
                    b = enum_language(g, x, cfg.max_len, k + 1, cfg.budget)
                except BudgetExceeded:
                    tally.add(None)
                    continue
                tally.add(a == b, f"grammar {gi} k={k} {x}: {len(a ^ b)} words differ")
    return tally


# traversal against the oracle

@dataclass(frozen=True)
class TraversalConfig:
    cases: int = 50
    seed: int = 2
    max_places: int = 3
    max_tokens: int = 5
    max_level: int = 2
    budget: SearchBudget = SearchBudget()


def traversal_corpus(cfg: TraversalConfig) -> List[TraversalCase]:
    rng = random.Random(cfg.seed)
    return [traversal_case(rng, cfg.max_level, cfg.max_tokens, cfg.max_places) for _ in range(cfg.cases)]


def traversal_suite(cfg: TraversalConfig = TraversalConfig()) -> Tuple[Tally, Dict[tuple, bool]]:
    """Every same-total marking pair of every case; also returns the oracle answers by (case, pair)."""
    tally = Tally()
    answers: Dict[tuple, bool] = {}
    for ci, case in enumerate(traversal_corpus(cfg)):
        gk = annotate(case.grammar, case.level)
        x = annotated(case.variable, case.level)
        for pi, (m, m2) in enumerate(case.pairs):
            inst = case.instance(m, m2)
            o = reach_along(inst, cfg.budget).as_bool()
            t = run_traverse(inst.net, gk, x, m, m2, cfg.budget).success
            if o is not None:
                answers[(ci, pi)] = o
            if o is None or t is None:
                tally.add(None)
            else:
                tally.add(o == t, f"case {ci} {m} -> {m2}: oracle {o}, traverse {t}")
    return tally, answers


@dataclass(frozen=True)
class ForwardConfig:
    traversal: TraversalConfig = TraversalConfig()
    positives: int = 1
    negatives: int = 1
    seed: int = 3
    budget: SearchBudget = SearchBudget(steps=300_000)


def forward_suite(cfg: ForwardConfig = ForwardConfig(),
                  answers: Optional[Dict[tuple, bool]] = None) -> Tuple[Tally, Tally]:
    """Agreement of the compiled program net with the oracle, and weakness of every compiled net.

    Per case a few oracle-positive and oracle-negative pairs are sampled.
    """
    cases = traversal_corpus(cfg.traversal)
    if answers is None:
        answers = {}
        for ci, case in enumerate(cases):
            for pi, (m, m2) in enumerate(case.pairs):
                o = reach_along(case.instance(m, m2), cfg.traversal.budget).as_bool()
                if o is not None:
                    answers[(ci, pi)] = o
    rng = random.Random(cfg.seed)
    agree, weak = Tally(), Tally()
    for ci, case in enumerate(cases):
        pos = [pi for pi in range(len(case.pairs)) if answers.get((ci, pi)) is True]
        neg = [pi for pi in range(len(case.pairs)) if answers.get((ci, pi)) is False]
        chosen = rng.sample(pos, min(cfg.positives, len(pos))) + rng.sample(neg, min(cfg.negatives, len(neg)))
        for pi in chosen:
            m, m2 = case.pairs[pi]
            res, art = forward_decide(case.instance(m, m2), cfg.budget)
            weak.add(is_weak(art.net, art.f)[0], f"case {ci}: compiled net not weak")
            got = res.as_bool()
            agree.add(None if got is None else got == answers[(ci, pi)],
                      f"case {ci} {m} -> {m2}: oracle {answers[(ci, pi)]}, forward {got}")
    return agree, weak


# compiler and interpreter

@dataclass(frozen=True)
class ProgramsConfig:
    directory: Path = CORPUS / "programs"
    # counters up to 6 each, one control token and at most three pending call sites
    budget: SearchBudget = SearchBudget(tokens=24, steps=500_000)


def programs_suite(cfg: ProgramsConfig = ProgramsConfig()) -> Tally:
    tally = Tally()
    for path in sorted(cfg.directory.glob("*.np")):
        p = load_program(read(str(path)), str(path))
        run = run_program(p, cfg.budget, collect=True)
        if run.verdict == "BudgetExceeded":
            tally.add(None)
            continue
        cp = compile_program(p)
        markings, exact = reachable_markings(cp.net, cfg.budget)
        halting = {_counter_key(m, p.counters) for m in markings if m[cp.halt_place]}
        vm = {_counter_key(Multiset(v), p.counters) for v in run.halting_valuations}
        # every valuation the interpreter halts with is a reachable halting marking of the net
        hits = [bounded_reach(cp.net, cp.target(dict(v)), cfg.budget) for v in sorted(vm)]
        ok = exact and run.complete and halting == vm and all(r.reached for r in hits)
        tally.add(ok, f"{path.name}: vm {run.verdict} {sorted(vm)}, net {sorted(halting)}")
    return tally


def _counter_key(m: Multiset, counters) -> tuple:
    return tuple(sorted((x, m[x]) for x in counters if m[x]))


# backward reduction

@dataclass(frozen=True)
class PnwCase:
    name: str
    net: PetriNet
    f: Dict[str, int]
    m_final: Multiset


def load_pnw_corpus(directory: Path = CORPUS / "pnw") -> List[PnwCase]:
    targets = json.loads(read(str(directory / "targets.json")))
    out = []
    for name in sorted(targets):
        net = load_net(read(str(directory / f"{name}.pn")))
        f = load_levels(read(str(directory / f"{name}.json")))
        out.append(PnwCase(name, net, f, parse_multiset(targets[name])))
    return out


@dataclass(frozen=True)
class BackwardConfig:
    directory: Path = CORPUS / "pnw"
    max_len: int = 10
    budget: SearchBudget = SearchBudget()


def corpus_markings(art: BackwardArtifact, budget: SearchBudget) -> List[Multiset]:
    """Markings of the widget net: a reachable normalized marking plus at most one token per shadow."""
    np, wp = art.normalized, art.widget
    base, _ = reachable_markings(np.net, budget)
    out = []
    for m in sorted(base, key=str):
        for bits in range(2 ** len(wp.shadow)):
            pad = Multiset({r: 1 for i, r in enumerate(wp.shadow) if bits >> i & 1})
            out.append(m + pad)
    return out


def backward_suite(cfg: BackwardConfig = BackwardConfig()) -> Dict[str, Tally]:
    """Decisions against direct search, shadow conservation and projection replay."""
    decide, conserve, replay = Tally(), Tally(), Tally()
    for case in load_pnw_corpus(cfg.directory):
        res, art = backward_decide(case.net, case.f, case.m_final, cfg.budget)
        direct = bounded_reach(case.net, case.m_final, cfg.budget).as_bool()
        got = res.as_bool()
        decide.add(None if got is None or direct is None else got == direct,
                   f"{case.name}: direct {direct}, backward {got}")
        np, wp = art.normalized, art.widget
        starts = corpus_markings(art, cfg.budget)
        base = set(wp.base)
        for l in range(np.n + 1):
            low = set(np.tested[:l]) | set(wp.shadow[:l])
            for m1 in starts:
                fired = words_along(wp.net, art.grammar, tower_variable(l), m1, cfg.max_len,
                                    2 * art.index + 2, cfg.budget)
                for w, m2 in sorted(fired.items()):
                    conserve.add(shadow_sums(np, wp, m1) == shadow_sums(np, wp, m2),
                                 f"{case.name} L{l} {' '.join(w)} from {m1}")
                    if any(m1[q] or m2[q] for q in low):
                        continue
                    s1, s2 = m1.restrict(np.net.places), m2.restrict(np.net.places)
                    proj = tuple(t for t in w if t in base)
                    replay.add(fire_word(np.net, s1, proj) == s2,
                               f"{case.name} L{l} {' '.join(w)} from {m1}")
    return {"decide": decide, "conservation": conserve, "replay": replay}


@dataclass(frozen=True)
class TowerConfig:
    directory: Path = CORPUS / "pnw"
    max_len: int = 8
    t_len: int = 3
    max_pad: int = 10
    member_sample: int = 3000
    seed: int = 0
    budget: SearchBudget = SearchBudget()


def tower_suite(cfg: TowerConfig = TowerConfig()) -> Dict[str, Tally]:
    """Inclusion of consecutive trace languages, and surjectivity of the projection on short words."""
    from itertools import product

    from .reduce_bwd import backward_artifact

    inclusion, preimage = Tally(), Tally()
    for case in load_pnw_corpus(cfg.directory):
        art = backward_artifact(case.net, case.f, case.m_final, cfg.budget)
        np, wp = art.normalized, art.widget
        prev = None
        for l in range(np.n + 1):
            words = enum_language(art.grammar, tower_variable(l), cfg.max_len, None, cfg.budget)
            # the grammar and the direct definition must agree; a seeded sample keeps this cheap
            sample = sorted(words)
            if len(sample) > cfg.member_sample:
                sample = random.Random(cfg.seed).sample(sample, cfg.member_sample)
            inclusion.add(all(tower_member(np, wp, l, w) for w in sample),
                          f"{case.name}: grammar word outside L{l}")
            if prev is not None:
                inclusion.add(prev <= words, f"{case.name}: L{l - 1} not inside L{l}")
            prev = words
        base = list(wp.base)
        for n in range(cfg.t_len + 1):
            for x in product(base, repeat=n):
                try:
                    w = find_preimage(art.grammar, art.start, x, base, cfg.max_pad,
                                      2 * art.index + 2, cfg.budget)
                except BudgetExceeded:
                    w = None
                if w is None:
                    preimage.add(None)
                else:
                    preimage.add(tower_member(np, wp, np.n, w), f"{case.name}: bad preimage of {x}")
    return {"inclusion": inclusion, "preimage": preimage}


# formats and determinism

def roundtrip_suite(root: Path = CORPUS) -> Tally:
    """Load then dump must reproduce each corpus file byte for byte, modulo comment lines."""
    tally = Tally()
    kinds = [("*.pn", load_net, dump_net), ("*.cfg", load_grammar, dump_grammar),
             ("*.np", load_program, dump_program), ("*.inst", load_instance_spec, dump_instance_spec),
             ("*.json", load_levels, dump_levels)]
    for pattern, load, dump in kinds:
        for path in sorted(root.rglob(pattern)):
            if path.name == "targets.json":
                continue
            text = read(str(path))
            body = "".join(l for l in text.splitlines(True) if not l.startswith("#"))
            once = dump(load(text))
            tally.add(once == body and dump(load(once)) == once, f"{path.relative_to(root)}")
    return tally


def determinism_commands(root: Path = CORPUS) -> List[List[str]]:
    """CLI invocations covering every decision path on the corpus, all with JSON reports."""
    cmds = []
    for inst in sorted((root / "instances").glob("*.inst")):
        for method in ("oracle", "enumerate", "traverse", "forward"):
            cmds.append(["--json", "decide", "--inst", str(inst), "--method", method, "--seed", "1"])
    for pn in sorted((root / "pnw").glob("*.pn")):
        targets = json.loads(read(str(root / "pnw" / "targets.json")))
        final = targets.get(pn.stem, "{}")
        cmds.append(["--json", "reduce-bwd", "--net", str(pn), "--final", final, "--decide"])
        cmds.append(["--json", "reach", "--net", str(pn), "--target", final])
    for np_ in sorted((root / "programs").glob("*.np")):
        cmds.append(["--json", "np-run", "--np", str(np_), "--all", "--budget-tokens", "24"])
    cmds.append(["--json", "xcheck", "--kind", "fwd", "--count", "3", "--seed", "4"])
    cmds.append(["--json", "xcheck", "--kind", "bwd", "--count", "5", "--seed", "4"])
    return cmds


def determinism_transcript(root: Path = CORPUS) -> str:
    """Concatenated JSON reports of ``determinism_commands``, one per line."""
    import contextlib
    import io

    from .cli import main

    buf = io.StringIO()
    for argv in determinism_commands(root):
        with contextlib.redirect_stdout(buf):
            code = main(argv)
        buf.write(f"exit {code}\n")
    return buf.getvalue()
