"""Stability-zone sweep over a square of plane directions around the desk
pair; writes scan.csv, zones.json and one SVG per level."""

import argparse
import time
from pathlib import Path

from qlev.classifier import SurveyParams
from qlev.cli_io import dumps, records_to_csv, zone_maps
from qlev.fixtures import desk_family, desk_fixture
from qlev.render import render_zone_map
from qlev.scanner import DirectionGrid, scan_directions
from qlev.tracer import TraceParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--resolution", type=int, default=21)
    ap.add_argument("--radius", type=float, default=0.05)
    ap.add_argument("--window", type=float, default=0.5)
    ap.add_argument("--grid-step", type=float, default=0.02)
    ap.add_argument("--s-max", type=float, default=300.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/zone_sweep")
    args = ap.parse_args()

    fam = desk_family()
    grid = DirectionGrid((fam.l1, fam.l2), (fam.p1, fam.p2), args.radius, args.resolution, fam.offsets)
    sp = SurveyParams(window=args.window, grid_step=args.grid_step, trace=TraceParams(s_max=args.s_max))
    t0 = time.perf_counter()
    res = scan_directions(desk_fixture(), grid, args.levels, sp, workers=args.workers)
    print(f"{len(res.records)} records in {time.perf_counter() - t0:.0f}s, {len(res.invalid)} invalid samples")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scan.csv").write_text(records_to_csv(res.records, 4))
    maps = zone_maps(res)
    (out / "zones.json").write_text(dumps({"invalid": [list(ij) for ij in res.invalid],
                                           "zoneMaps": [z.to_dict() for z in maps]}))
    c = args.resolution // 2
    for k, z in enumerate(maps):
        (out / f"zones_{k}.svg").write_text(render_zone_map(z.to_dict()))
        zc = z.zone_of(c, c)
        print(f"c={z.level:g}: {len(z.legend)} zones; center zone {z.legend[zc]} ({z.area(zc)} cells)")


if __name__ == "__main__":
    main()
