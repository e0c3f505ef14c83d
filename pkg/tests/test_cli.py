import json

import pytest

from cfltrace.cli import main

from conftest import CORPUS

I = CORPUS / "instances"
P = CORPUS / "programs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("method", ["oracle", "enumerate", "traverse", "forward"])
def test_decide_methods_agree(capsys, method):
    code, out, _ = run(capsys, "--json", "decide", "--inst", I / "two_step_k2.inst", "--method", method)
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "Reached"
    code, out, _ = run(capsys, "--json", "decide", "--inst", I / "two_step_k1.inst", "--method", method)
    assert json.loads(out)["verdict"] == "ExhaustedNo"


def test_report_is_deterministic(capsys):
    argv = ("--json", "decide", "--inst", I / "two_step_k2.inst", "--seed", "5")
    first = run(capsys, *argv)[1]
    assert run(capsys, *argv)[1] == first
    rep = json.loads(first)
    assert rep["schema"] == 1 and rep["seed"] == 5 and "wall_time" not in rep
    assert all(v.startswith("sha256:") for v in rep["inputs"].values())


def test_timing_flag_adds_wall_time(capsys):
    _, out, _ = run(capsys, "--json", "--timing", "decide", "--inst", I / "one_step.inst")
    assert "wall_time" in json.loads(out)


def test_budget_exceeded_exit_code(capsys):
    code, out, _ = run(capsys, "reach", "--net", CORPUS / "pnw" / "rand_03.pn", "--target", "{s0:9}",
                       "--budget-tokens", "1")
    assert code == 2 and out.startswith("BudgetExceeded")


def test_errors_exit_one(capsys):
    code, _, err = run(capsys, "reach", "--net", "missing.pn", "--target", "{}")
    assert code == 1 and "error" in err
    assert run(capsys, "no-such-command")[0] == 1


def test_program_commands(capsys, tmp_path):
    assert run(capsys, "np-check", "--np", P / "chain_depth3.np")[0] == 0
    code, out, _ = run(capsys, "np-run", "--np", P / "guard_blocks.np")
    assert code == 0 and out.startswith("Stuck")
    out_net = tmp_path / "prog.pn"
    assert run(capsys, "np-compile", "--np", P / "gosub_once.np", "--out", out_net)[0] == 0
    assert "@halt" in out_net.read_text()


def test_reduce_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "reduce-bwd", "--net", CORPUS / "pnw" / "blocked.pn", "--decide")
    assert code == 0 and out.startswith("ExhaustedNo")
    emitted = tmp_path / "fwd.np"
    assert run(capsys, "reduce-fwd", "--inst", I / "two_step_k2.inst", "--emit", emitted)[0] == 0
    assert run(capsys, "np-check", "--np", emitted)[0] == 0


def test_grammar_commands(capsys):
    code, out, _ = run(capsys, "index-check", "--cfg", I / "two_step.cfg", "--word", "t_a t_b")
    assert code == 0 and "2" in out
    code, out, _ = run(capsys, "enum", "--cfg", I / "two_step.cfg", "--max-len", "3")
    assert code == 0 and "t_a t_b" in out
