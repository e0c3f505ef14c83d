"""Regenerate corpus/pnw/rand_*.pn, their level maps and targets.json from a fixed seed."""

import argparse
import json
from pathlib import Path

from cfltrace.core import SearchBudget, format_multiset
from cfltrace.formats import dump_levels, dump_net
from cfltrace.gen import random_weak_net, seeded
from cfltrace.petri import bounded_reach


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "corpus" / "pnw"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--count", type=int, default=30)
    args = ap.parse_args(argv)
    out = Path(args.out)
    rng = seeded(args.seed)
    targets = {}
    reached = 0
    for i in range(args.count):
        case = random_weak_net(rng)
        name = f"rand_{i:02d}"
        (out / f"{name}.pn").write_text(dump_net(case.net))
        (out / f"{name}.json").write_text(dump_levels(case.f))
        targets[name] = format_multiset(case.m_final)
        reached += bounded_reach(case.net, case.m_final, SearchBudget()).reached
    (out / "targets.json").write_text(json.dumps(targets, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.count} nets to {out}, {reached} with a reachable target")


if __name__ == "__main__":
    main()
