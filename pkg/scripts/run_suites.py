"""Run the experiment suites and print one JSON object per suite.

    python scripts/run_suites.py                  # everything
    python scripts/run_suites.py annotation tower # a selection
"""

import argparse
import json
import time

from cfltrace import experiments as E


def _dump(r):
    if isinstance(r, E.Tally):
        return r.as_dict()
    return {k: v.as_dict() for k, v in r.items()}


def main():
    names = ["annotation", "traversal", "forward", "programs", "backward", "tower", "roundtrip"]
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("suites", nargs="*", metavar="SUITE", help=f"any of {', '.join(names)}")
    ap.add_argument("--failures", action="store_true", help="keep failure messages in the output")
    args = ap.parse_args()
    unknown = set(args.suites) - set(names)
    if unknown:
        ap.error(f"unknown suite(s): {', '.join(sorted(unknown))}")

    answers = None
    for name in args.suites or names:
        t0 = time.perf_counter()
        if name == "annotation":
            out = _dump(E.annotation_suite())
        elif name == "traversal":
            tally, answers = E.traversal_suite()
            out = _dump(tally)
        elif name == "forward":
            if answers is None:
                answers = E.traversal_suite()[1]
            agree, weak = E.forward_suite(E.ForwardConfig(), answers)
            out = {"agree": agree.as_dict(), "weak": weak.as_dict()}
        elif name == "programs":
            out = _dump(E.programs_suite())
        elif name == "backward":
            out = _dump(E.backward_suite())
        elif name == "tower":
            out = _dump(E.tower_suite())
        else:
            out = _dump(E.roundtrip_suite())
        if not args.failures:
            out = _strip(out)
        print(json.dumps({"suite": name, "seconds": round(time.perf_counter() - t0, 1), "result": out},
                         sort_keys=True), flush=True)


def _strip(d):
    if "failures" in d:
        return {k: v for k, v in d.items() if k != "failures"}
    return {k: _strip(v) for k, v in d.items()}


if __name__ == "__main__":
    main()
