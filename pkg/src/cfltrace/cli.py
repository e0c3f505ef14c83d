"""Command-line front end.  Exit status: 0 verdict computed, 1 usage or parse error, 2 budget exceeded."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict
from typing import Dict, List, Optional

from .core import BudgetExceeded, Multiset, SearchBudget, Verdict, parse_multiset, word_str
from .formats import (InvariantViolation, ParseError, dump_grammar, dump_levels, dump_net, dump_program,
                      load_instance, parse_model, read)
from .grammar import GrammarError, annotate, annotated, derive_word, enum_language
from .netprog import ProgramError, NotWeak, check_program, compile_program, program_index_function, run_program
from .oracle import enumerate_and_fire, reach_along
from .petri import NetError, bounded_reach, fire_word, infer_index_function, is_weak
from .reduce_bwd import backward_decide, build_nprime, build_trace_grammar, normalize_pnw
from .reduce_fwd import forward_artifact, forward_decide
from .traverse import run_traverse

SCHEMA_VERSION = 1


class Report:
    """Replayable run report; digests are content hashes of the input files."""

    def __init__(self, args, command: str):
        self.args = args
        self.data: Dict[str, object] = {"schema": SCHEMA_VERSION, "command": command, "inputs": {}}
        self.t0 = time.perf_counter()

    def digest(self, role: str, path: str) -> None:
        with open(path, "rb") as fh:
            self.data["inputs"][role] = "sha256:" + hashlib.sha256(fh.read()).hexdigest()

    def finish(self, verdict: str, witness=None, **extra) -> int:
        self.data["verdict"] = verdict
        if witness is not None:
            self.data["witness"] = list(witness)
            self.data["witness_length"] = len(witness)
        if hasattr(self.args, "budget_tokens"):
            self.data["budget"] = asdict(budget_of(self.args))
            self.data["seed"] = self.args.seed
        extra = {k: v for k, v in extra.items() if v not in ("", None)}
        if extra:
            self.data["details"] = extra
        if getattr(self.args, "timing", False):
            self.data["wall_time"] = round(time.perf_counter() - self.t0, 6)
        if self.args.json:
            print(json.dumps(self.data, sort_keys=True))
        else:
            line = verdict
            if witness is not None:
                line += f"  witness: {word_str(tuple(witness))}"
            print(line)
            for k, v in extra.items():
                if not isinstance(v, (dict, list)):
                    print(f"  {k}: {v}")
        return 2 if verdict == Verdict.BUDGET_EXCEEDED.value else 0


def budget_of(args) -> SearchBudget:
    return SearchBudget(tokens=args.budget_tokens, steps=args.budget_steps, word_len=args.budget_len)


def _write(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _word(text: str):
    return tuple(text.replace(",", " ").split()) if text and text != "eps" else ()


def cmd_fire(args) -> int:
    rep = Report(args, "fire")
    rep.digest("net", args.net)
    net = parse_model(args.net, "pn")
    start = parse_multiset(args.start) if args.start else net.init
    w = _word(args.word)
    m = fire_word(net, start, w)
    if m is None:
        return rep.finish("Disabled", w)
    return rep.finish("Fired", w, marking=str(m))


def cmd_reach(args) -> int:
    rep = Report(args, "reach")
    rep.digest("net", args.net)
    net = parse_model(args.net, "pn")
    start = parse_multiset(args.start) if args.start else None
    res = bounded_reach(net, parse_multiset(args.target), budget_of(args), start)
    return rep.finish(res.verdict.value, res.witness, states=res.states_explored, reason=res.reason)


def cmd_enum(args) -> int:
    rep = Report(args, "enum")
    rep.digest("grammar", args.cfg)
    g = parse_model(args.cfg, "cfg")
    var = args.var or g.start
    try:
        words = enum_language(g, var, args.max_len, args.index, budget_of(args))
    except BudgetExceeded:
        return rep.finish(Verdict.BUDGET_EXCEEDED.value)
    ordered = sorted(words, key=lambda w: (len(w), w))
    if not args.json:
        for w in ordered:
            print(word_str(w))
    else:
        rep.data["words"] = [word_str(w) for w in ordered]
    return rep.finish("Enumerated", count=len(ordered))


def cmd_annotate(args) -> int:
    g = parse_model(args.cfg, "cfg")
    text = dump_grammar(annotate(g, args.k))
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_index_check(args) -> int:
    rep = Report(args, "index-check")
    rep.digest("grammar", args.cfg)
    g = parse_model(args.cfg, "cfg")
    var = args.var or g.start
    w = _word(args.word)
    b = budget_of(args)
    for k in range(1, args.max_index + 1):
        d = derive_word(g, var, w, k, b)
        if d is not None:
            return rep.finish(f"Index {k}", w, forms=" => ".join(word_str(f) for f in d.forms))
    if derive_word(g, var, w, None, b) is None:
        return rep.finish("NotInLanguage", w)
    return rep.finish(Verdict.BUDGET_EXCEEDED.value, w, reason=f"no derivation of index <= {args.max_index}")


def _levels(args, net):
    if args.f:
        rep_path = args.f
        return parse_model(rep_path, "json")
    f = infer_index_function(net)
    if f is None:
        raise InvariantViolation("zero-test sets do not form a chain; no index function exists")
    return f


def cmd_weak_check(args) -> int:
    rep = Report(args, "weak-check")
    rep.digest("net", args.net)
    net = parse_model(args.net, "pn")
    f = _levels(args, net)
    ok, bad = is_weak(net, f)
    return rep.finish("Weak" if ok else "NotWeak",
                      violations=[f"{p} <= {q} tested by {t}" for p, q, t in bad], levels=f)


def cmd_np_check(args) -> int:
    rep = Report(args, "np-check")
    rep.digest("program", args.np)
    levels = check_program(parse_model(args.np, "np"))
    return rep.finish("Valid", levels=levels)


def cmd_np_compile(args) -> int:
    prog = parse_model(args.np, "np")
    compiled = compile_program(prog)
    _write(args.out, dump_net(compiled.net))
    if not args.out:
        sys.stdout.write(dump_net(compiled.net))
    if args.levels:
        f = program_index_function(prog, parse_model(args.levels, "json"), compiled)
        _write(args.emit_levels, dump_levels(f))
    return 0


def cmd_np_run(args) -> int:
    rep = Report(args, "np-run")
    rep.digest("program", args.np)
    run = run_program(parse_model(args.np, "np"), budget_of(args), collect=args.all)
    verdict = run.verdict if run.verdict != "BudgetExceeded" else Verdict.BUDGET_EXCEEDED.value
    return rep.finish(verdict, valuation=run.valuation, configurations=run.configurations)


def cmd_reduce_fwd(args) -> int:
    rep = Report(args, "reduce-fwd")
    rep.digest("instance", args.inst)
    inst = load_instance(args.inst)
    if args.decide:
        res, art = forward_decide(inst, budget_of(args))
    else:
        art, res = forward_artifact(inst), None
    _write(args.emit, dump_program(art.program))
    _write(args.emit_net, dump_net(art.net))
    _write(args.emit_levels, dump_levels(art.f))
    ok, _ = is_weak(art.net, art.f)
    details = dict(places=len(art.net.places), transitions=len(art.net.transitions),
                   commands=art.program.size(), weak=ok)
    if res is None:
        return rep.finish("Built", **details)
    return rep.finish(res.verdict.value, res.witness, states=res.states_explored, **details)


def cmd_reduce_bwd(args) -> int:
    rep = Report(args, "reduce-bwd")
    rep.digest("net", args.net)
    net = parse_model(args.net, "pn")
    f = _levels(args, net)
    final = parse_multiset(args.final)
    b = budget_of(args)
    if args.decide:
        res, art = backward_decide(net, f, final, b)
        np, wp, g = art.normalized, art.widget, art.grammar
    else:
        res = None
        np = normalize_pnw(net, f, final)
        wp = build_nprime(np)
        g, _, _ = build_trace_grammar(np, wp)
    _write(args.emit_cfg, dump_grammar(g))
    _write(args.emit_net, dump_net(wp.net))
    details = dict(tested=np.n, index=np.n + 1, normalized=np.gadget)
    if res is None:
        return rep.finish("Built", **details)
    if res.reached:
        details["projected"] = word_str(res.extra["projected"])
    return rep.finish(res.verdict.value, res.witness, **details)


METHODS = ("oracle", "enumerate", "traverse", "forward")


def cmd_decide(args) -> int:
    rep = Report(args, "decide")
    rep.digest("instance", args.inst)
    inst = load_instance(args.inst)
    b = budget_of(args)
    if args.method == "oracle":
        res = reach_along(inst, b)
    elif args.method == "enumerate":
        res = enumerate_and_fire(inst, b)
    elif args.method == "forward":
        res, _ = forward_decide(inst, b)
    else:
        if inst.k is None or inst.k < 1:
            raise InvariantViolation("traverse needs an index bound k >= 1")
        level = inst.k - 1
        tr = run_traverse(inst.net, annotate(inst.grammar, level), annotated(inst.start, level),
                          inst.net.init, inst.m_final, b)
        if args.trace:
            _write(args.trace, tr.trace_json() + "\n")
        return rep.finish(tr.verdict.value, goals=tr.goals)
    return rep.finish(res.verdict.value, res.witness, states=res.states_explored, reason=res.reason)


def cmd_xcheck(args) -> int:
    from .xcheck import xcheck_backward, xcheck_forward

    rep = Report(args, "xcheck")
    b = budget_of(args)
    if args.kind == "bwd":
        results = xcheck_backward(args.seed, args.count, b)
    else:
        results = xcheck_forward(args.seed, args.count, b, args.pairs, args.mutate, not args.no_forward)
    rows = []
    for c in results:
        row = {"status": c.status, "verdicts": c.verdicts}
        if c.shrunk is not None:
            s = c.shrunk
            row["shrunk"] = {"net": dump_net(s.net), "grammar": dump_grammar(s.grammar), "start": s.start,
                             "k": s.k, "final": str(s.m_final)}
        rows.append(row)
    counts = {s: sum(r["status"] == s for r in rows) for s in ("Agree", "Disagreement", "Inconclusive")}
    if args.json:
        rep.data["instances"] = rows
    elif counts["Disagreement"]:
        for r in rows:
            if "shrunk" in r:
                print("disagreement:", r["verdicts"])
                print(r["shrunk"]["net"] + r["shrunk"]["grammar"], end="")
                print(f"start {r['shrunk']['start']}  k {r['shrunk']['k']}  final {r['shrunk']['final']}")
    verdict = "Disagreement" if counts["Disagreement"] else "Agree"
    return rep.finish(verdict, **counts)


def _budget_flags(p: argparse.ArgumentParser) -> None:
    d = SearchBudget()
    p.add_argument("--budget-tokens", type=int, default=d.tokens)
    p.add_argument("--budget-steps", type=int, default=d.steps)
    p.add_argument("--budget-len", type=int, default=d.word_len)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfltrace", description=__doc__)
    ap.add_argument("--json", action="store_true", help="emit a JSON run report")
    ap.add_argument("--timing", action="store_true", help="include wall time in the report")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, search=True):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        if search:
            _budget_flags(p)
        return p

    p = add("fire", cmd_fire, search=False)
    p.add_argument("--net", required=True)
    p.add_argument("--word", default="")
    p.add_argument("--from", dest="start")
    p = add("reach", cmd_reach)
    p.add_argument("--net", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--from", dest="start")
    p = add("enum", cmd_enum)
    p.add_argument("--cfg", required=True)
    p.add_argument("--var")
    p.add_argument("--max-len", type=int, default=6)
    p.add_argument("--index", type=int)
    p = add("annotate", cmd_annotate, search=False)
    p.add_argument("--cfg", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p = add("index-check", cmd_index_check)
    p.add_argument("--cfg", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--var")
    p.add_argument("--max-index", type=int, default=6)
    p = add("weak-check", cmd_weak_check, search=False)
    p.add_argument("--net", required=True)
    p.add_argument("--f")
    p = add("np-check", cmd_np_check, search=False)
    p.add_argument("--np", required=True)
    p = add("np-compile", cmd_np_compile, search=False)
    p.add_argument("--np", required=True)
    p.add_argument("--out")
    p.add_argument("--levels", help="JSON map from counters to levels")
    p.add_argument("--emit-levels")
    p = add("np-run", cmd_np_run)
    p.add_argument("--np", required=True)
    p.add_argument("--all", action="store_true", help="collect every halting valuation")
    p = add("reduce-fwd", cmd_reduce_fwd)
    p.add_argument("--inst", required=True)
    p.add_argument("--emit")
    p.add_argument("--emit-net")
    p.add_argument("--emit-levels")
    p.add_argument("--decide", action="store_true")
    p = add("reduce-bwd", cmd_reduce_bwd)
    p.add_argument("--net", required=True)
    p.add_argument("--f")
    p.add_argument("--final", default="{}")
    p.add_argument("--emit-cfg")
    p.add_argument("--emit-net")
    p.add_argument("--decide", action="store_true")
    p = add("decide", cmd_decide)
    p.add_argument("--inst", required=True)
    p.add_argument("--method", choices=METHODS, default="oracle")
    p.add_argument("--trace", help="write the traversal trace (JSON) here")
    p = add("xcheck", cmd_xcheck)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--pairs", type=int, default=2)
    p.add_argument("--kind", choices=("fwd", "bwd"), default="fwd")
    p.add_argument("--mutate", choices=("dec-noop", "drop-guards"))
    p.add_argument("--no-forward", action="store_true")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.fn(args)
    except (ParseError, InvariantViolation, GrammarError, NetError, ProgramError, NotWeak, FileNotFoundError,
            ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
