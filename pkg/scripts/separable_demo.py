"""Separable dichotomy on cos 2 pi x1 + cos 2 pi x2: closed ovals off the
critical level, straight diagonal lines at level 0. Writes an SVG per level."""

import argparse
from pathlib import Path

from qlev.classifier import SurveyParams, survey_level
from qlev.cli_io import trajectory_to_dict
from qlev.fixtures import separable
from qlev.lattice import LinearForm, build_plane
from qlev.render import render_trajectories
from qlev.tracer import TraceParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=float, nargs="+", default=[1.0, 0.0, -1.0])
    ap.add_argument("--s-max", type=float, default=200.0)
    ap.add_argument("--out", default="out/separable_demo")
    args = ap.parse_args()

    plane = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0.0, 0.0))
    sp = SurveyParams(trace=TraceParams(s_max=args.s_max, step=0.01))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, c in enumerate(args.levels):
        res = survey_level(separable(), plane, c, sp)
        kinds = [lab.kind.value for _, lab in res]
        print(f"c={c:g}: {len(res)} components {sorted(set(kinds))}")
        items = [trajectory_to_dict(tr, lab, decimate=1) for tr, lab in res]
        (out / f"level_{k}.svg").write_text(render_trajectories(items))


if __name__ == "__main__":
    main()
