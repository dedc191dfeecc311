"""Positive control: a fixture whose open strips lie along x1 = const.

Labels one level on a generic plane near the desk pair and prints the
hyperplane label and the per-trajectory level report.
"""

import argparse

from qlev.classifier import Kind, SurveyParams, label_by_perturbation, label_level
from qlev.fixtures import control_fixture, desk_family
from qlev.tracer import TraceParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=float, default=0.3)
    ap.add_argument("--s-max", type=float, default=3000.0)
    ap.add_argument("--center", type=float, nargs=2, default=[0.01, 0.007])
    ap.add_argument("--radius", type=float, default=1e-2)
    args = ap.parse_args()

    fam = desk_family()
    s, t = args.center
    r = args.radius
    base = fam.plane(s, t)
    perts = [fam.plane(s + r, t), fam.plane(s - r, t), fam.plane(s, t + r), fam.plane(s, t - r)]
    sp = SurveyParams(trace=TraceParams(s_max=args.s_max))
    f = control_fixture()
    lab = label_by_perturbation(f, base, args.level, perts, sp)
    print(f"hyperplane label {lab.normal} residual {lab.residual:.2e} from {lab.planes_used} planes, "
          f"bounded={lab.bounded}")
    rep = label_level(f, base, args.level, perts, sp)
    print(f"level report: counts {rep.counts} consistent={rep.consistent} shared={rep.shared_normal} "
          f"signs={rep.signs}")
    for lab in rep.labels:
        if lab.kind is Kind.OPEN_STRIP:
            print(f"  {lab.normal} bound ratio {lab.bound_ratio:.4f}")


if __name__ == "__main__":
    main()
