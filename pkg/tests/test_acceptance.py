"""End-to-end acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` for the full report.
"""

import functools
import os
import subprocess
import sys
import time

import pytest

from cfltrace import experiments as E

pytestmark = pytest.mark.acceptance


def report(capsys, n, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{n}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")


@functools.lru_cache(maxsize=None)
def traversal():
    t0 = time.perf_counter()
    tally, answers = E.traversal_suite(E.TraversalConfig())
    return tally, answers, time.perf_counter() - t0


def test_1_annotation_equals_index_bound(capsys):
    cfg = E.AnnotationConfig()
    t0 = time.perf_counter()
    t = E.annotation_suite(cfg)
    ok = cfg.grammars >= 20 and t.failed == 0 and t.inconclusive == 0 and t.passed > 0
    report(capsys, 1, "annotated grammar vs index-bounded enumeration", ok,
           f"{cfg.grammars} grammars, k in {list(cfg.ks)}, {t.passed} variable checks, "
           f"{t.failed} failed, {t.inconclusive} over budget, {time.perf_counter() - t0:.0f}s")
    assert ok, t.failures


def test_2_traversal_matches_oracle(capsys):
    t, _, secs = traversal()
    cfg = E.TraversalConfig()
    ok = cfg.cases >= 50 and t.failed == 0 and t.conclusive_rate >= 0.9
    report(capsys, 2, "traversal vs oracle", ok,
           f"{cfg.cases} instances, {t.total} marking pairs, {t.failed} disagreements, "
           f"{100 * t.conclusive_rate:.1f}% conclusive, {secs:.0f}s")
    assert ok, t.failures


def test_3_forward_pipeline(capsys):
    _, answers, _ = traversal()
    t0 = time.perf_counter()
    agree, weak = E.forward_suite(E.ForwardConfig(), answers)
    ok = agree.failed == 0 and weak.failed == 0 and weak.passed == weak.total > 0
    report(capsys, 3, "compiled program net vs oracle", ok,
           f"{agree.total} instances, {agree.failed} disagreements, {agree.inconclusive} over budget, "
           f"weak {weak.passed}/{weak.total}, {time.perf_counter() - t0:.0f}s")
    assert ok, agree.failures + weak.failures


def test_4_compiler_bisimulation(capsys):
    t = E.programs_suite(E.ProgramsConfig())
    ok = t.total >= 30 and t.failed == 0 and t.inconclusive == 0
    report(capsys, 4, "interpreter vs compiled net", ok,
           f"{t.total} programs, {t.failed} mismatches, {t.inconclusive} non-exhaustive")
    assert ok, t.failures


def test_5_backward_pipeline(capsys):
    t0 = time.perf_counter()
    r = E.backward_suite(E.BackwardConfig())
    d, c, p = r["decide"], r["conservation"], r["replay"]
    ok = (d.total >= 30 and d.failed == 0 and d.inconclusive == 0 and c.failed == 0 and c.passed > 0
          and p.failed == 0 and p.passed > 0)
    report(capsys, 5, "widget-net decision, shadow conservation, projection replay", ok,
           f"{d.total} nets ({d.failed} wrong, {d.inconclusive} over budget), "
           f"{c.passed} conservation checks, {p.passed} replays, {c.failed + p.failed} failures, "
           f"{time.perf_counter() - t0:.0f}s")
    assert ok, d.failures + c.failures + p.failures


def test_6_trace_tower(capsys):
    r = E.tower_suite(E.TowerConfig())
    inc, pre = r["inclusion"], r["preimage"]
    rate = pre.inconclusive / max(pre.total, 1)
    ok = inc.failed == 0 and pre.failed == 0 and rate <= 0.05 and inc.passed > 0
    report(capsys, 6, "tower inclusions and projection preimages", ok,
           f"{inc.passed} inclusion checks, {pre.passed} preimages found, "
           f"{pre.inconclusive} inconclusive ({100 * rate:.1f}%), {inc.failed + pre.failed} counterexamples")
    assert ok, inc.failures + pre.failures


def _transcript(hash_seed):
    env = dict(os.environ, PYTHONHASHSEED=str(hash_seed))
    out = subprocess.run([sys.executable, "-c",
                          "import sys; from cfltrace.experiments import determinism_transcript as d; "
                          "sys.stdout.write(d())"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout


def test_7_roundtrip_and_determinism(capsys):
    rt = E.roundtrip_suite()
    a, b = _transcript(1), _transcript(2)
    reports = sum(1 for line in a.splitlines() if line.startswith("{"))
    ok = rt.failed == 0 and rt.passed > 0 and a == b and reports > 0
    report(capsys, 7, "format round-trip and report determinism", ok,
           f"{rt.passed} files round-trip, {rt.failed} differ; {reports} JSON reports "
           f"{'identical' if a == b else 'DIFFER'} across two processes with different hash seeds")
    assert ok, rt.failures
