"""Perturbation labels on the desk fixture around the rational pair
l1 = x4, l2 = x1 - x2, with the three stability reruns.

    python3 scripts/desk_labels.py --levels 0.5 1.0 1.5 --s-max 2000
"""

import argparse
import json

from qlev.classifier import SurveyParams
from qlev.experiments import stability_runs
from qlev.fixtures import desk_family, desk_fixture
from qlev.tracer import TraceParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--s-max", type=float, default=2000.0)
    ap.add_argument("--radius", type=float, default=1e-2)
    ap.add_argument("--json", help="write per-run normals here")
    args = ap.parse_args()

    sp = SurveyParams(trace=TraceParams(s_max=args.s_max))
    runs = stability_runs(desk_fixture(), desk_family(), args.levels, sp, radius=args.radius)
    for run in runs:
        print(run.summary())
    agree = len({tuple(r.normals) for r in runs}) == 1 and None not in runs[0].normals
    print("normals agree across runs:", agree)
    if args.json:
        doc = {r.name: [None if n is None else list(n) for n in r.normals] for r in runs}
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
