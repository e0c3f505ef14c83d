import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfltrace.core import SearchBudget
from cfltrace.formats import load_program, read
from cfltrace.netprog import (Command, CrossSubroutineJump, DanglingJump, Dec, DuplicateLabel, Gosub,
                              Goto, Halt, IfAllZeroGoto, Inc, LevelViolation, MissingReturn,
                              NetProgram, NotWeak, Return, Subroutine, UnknownCounter,
                              check_program, compile_program, control_tokens_ok,
                              program_index_function, run_program)
from cfltrace.petri import bounded_reach, reachable_markings

from conftest import CORPUS

B = SearchBudget(tokens=20)
PROGRAMS = sorted((CORPUS / "programs").glob("*.np"))


def prog(*subs, counters=("x", "y"), entry="main"):
    return NetProgram(tuple(counters), tuple(Subroutine(n, lvl, tuple(Command(l, o) for l, o in cmds))
                                            for n, lvl, cmds in subs), entry)


def expected(path):
    return read(str(path)).splitlines()[0].split(":", 1)[1].strip()


@pytest.mark.parametrize("path", PROGRAMS, ids=lambda p: p.stem)
def test_corpus_program_verdict(path):
    p = load_program(read(str(path)))
    assert p.size() <= 40
    run = run_program(p, B, collect=True)
    assert run.complete
    assert run.verdict == expected(path)
    cp = compile_program(p)
    ms, exact = reachable_markings(cp.net, B)
    assert exact
    assert control_tokens_ok(cp, [m for m in ms if any(m[q] for q in cp.control_places + (cp.halt_place,))])
    halting = {tuple(sorted((x, m[x]) for x in p.counters if m[x])) for m in ms if m[cp.halt_place]}
    vm = {tuple(sorted((x, n) for x, n in v.items() if n)) for v in run.halting_valuations}
    assert halting == vm


def test_corpus_has_required_shapes():
    texts = [read(str(p)) for p in PROGRAMS]
    assert len(texts) >= 30
    assert any("level 3" in t for t in texts)
    assert any("if " in t and "," in t.split("if ", 1)[1].split("=")[0] for t in texts)


@pytest.mark.parametrize("p,err", [
    (prog(("main", 0, [("a", Inc("x")), ("a", Halt())])), DuplicateLabel),
    (prog(("main", 0, [("a", Goto("zz"))])), DanglingJump),
    (prog(("main", 0, [("a", Inc("x"))])), DanglingJump),
    (prog(("main", 0, [("a", Inc("w")), ("b", Halt())])), UnknownCounter),
    (prog(("main", 0, [("a", Gosub("s")), ("b", Halt())]), ("s", 2, [("c", Return())])), LevelViolation),
    (prog(("main", 0, [("a", Gosub("s")), ("b", Halt())]), ("s", 1, [("c", Goto("c"))])), MissingReturn),
    (prog(("main", 0, [("a", Gosub("s")), ("b", Halt())]), ("s", 1, [("c", Goto("b")), ("d", Return())])),
     CrossSubroutineJump),
])
def test_program_errors(p, err):
    with pytest.raises(err):
        check_program(p)


def test_mutations_change_behaviour():
    p = load_program(read(str(CORPUS / "programs" / "dec_at_zero.np")))
    cp = compile_program(p, mutation="dec-noop")
    assert bounded_reach(cp.net, cp.target(), B).reached
    p = load_program(read(str(CORPUS / "programs" / "guard_blocks.np")))
    cp = compile_program(p, mutation="drop-guards")
    assert bounded_reach(cp.net, cp.target({"x": 1}), B).reached
    with pytest.raises(ValueError):
        compile_program(p, mutation="nope")


def test_index_function_weak_for_prefix_guards():
    p = load_program(read(str(CORPUS / "programs" / "chain_depth3_choices.np")))
    f = program_index_function(p, {"a": 0, "b": 1, "c": 2})
    assert f["a"] == 0 and f["@m1"] == 4


def test_index_function_rejects_non_prefix_guard():
    p = prog(("main", 0, [("a", IfAllZeroGoto(("y",), "b")), ("b", Halt())]))
    with pytest.raises(NotWeak) as e:
        program_index_function(p, {"x": 0, "y": 1})
    assert e.value.violations


ops = st.lists(st.tuples(st.sampled_from(["inc", "dec"]), st.sampled_from(["x", "y"])), max_size=10)


@given(ops, st.sampled_from([(), ("x",), ("x", "y")]))
def test_straight_line_semantics(seq, guard):
    cmds, val, alive = [], {"x": 0, "y": 0}, True
    for i, (kind, c) in enumerate(seq):
        cmds.append((f"c{i}", Inc(c) if kind == "inc" else Dec(c)))
        if alive:
            val[c] += 1 if kind == "inc" else -1
            alive = val[c] >= 0
    if guard:
        cmds.append(("g", IfAllZeroGoto(guard, "h")))
        alive = alive and all(val[c] == 0 for c in guard)
    cmds.append(("h", Halt()))
    p = prog(("main", 0, cmds))
    run = run_program(p, B)
    assert run.halted == alive
    cp = compile_program(p)
    res = bounded_reach(cp.net, cp.target(val if alive else None), B)
    assert res.reached == alive
