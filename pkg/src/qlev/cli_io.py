"""Run configuration, result files and the ``qlev`` command line.

Exit codes: 0 ok, 1 configuration error, 2 empty level, 3 degenerate plane.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classifier import ClassifierConfig, SurveyParams, survey_level
from .lattice import DegeneratePlaneError, LatticeError, LinearForm, PlaneSpec, build_plane
from .qpfunction import TrigPolynomial, find_critical_points, restrict
from .render import EmptyInputError, RenderSpec, render_trajectories, render_zone_map
from .scanner import DirectionGrid, ScanResult, build_zone_map, scan_directions
from .tracer import EmptyLevelError, TraceParams, Trajectory, find_seeds

log = logging.getLogger("qlev")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EMPTY_LEVEL = 2
EXIT_DEGENERATE_PLANE = 3

CSV_COLUMNS = (
    "i", "j", "s", "t", "level", "kind", "n1", "n2", "n3", "n4",
    "residual", "orientationSign", "seeds", "unresolved",
)
U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


# ---------------------------------------------------------------------------
# configuration


def _form(v, name: str) -> LinearForm:
    """A JSON form: all-integer lists are rational and keep their witness."""
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{name}: expected a nonempty list of coefficients")
    try:
        if all(isinstance(e, int) and not isinstance(e, bool) for e in v):
            return LinearForm.rational(v)
        return LinearForm(tuple(float(e) for e in v))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


@dataclass(frozen=True)
class PlaneConfig:
    forms: tuple[tuple, ...]
    offsets: tuple[float, ...]

    def build(self) -> PlaneSpec:
        forms = [_form(list(v), f"plane.forms[{i}]") for i, v in enumerate(self.forms)]
        return build_plane(forms, self.offsets)


@dataclass(frozen=True)
class GridConfig:
    base_forms: tuple[tuple, ...]
    generators: tuple[tuple, ...]
    radius: float
    resolution: int
    offsets: tuple[float, ...]

    def build(self) -> DirectionGrid:
        base = tuple(_form(list(v), f"grid.baseForms[{i}]") for i, v in enumerate(self.base_forms))
        gens = tuple(_form(list(v), f"grid.generators[{i}]") for i, v in enumerate(self.generators))
        return DirectionGrid(base, gens, self.radius, self.resolution, self.offsets)


@dataclass(frozen=True)
class RunConfig:
    function: str
    levels: tuple[float, ...]
    plane: PlaneConfig | None = None
    grid: GridConfig | None = None
    window: float = 1.0
    grid_step: float = 0.05
    tracer: TraceParams = TraceParams(s_max=5000.0)
    classifier: ClassifierConfig = ClassifierConfig()
    render: RenderSpec = RenderSpec()
    out_dir: str = "out"
    svg: bool = False
    decimate: int = 10
    workers: int = 1
    seed: int | None = None
    jitter: float = 0.0
    base_dir: str = field(default=".", compare=False)

    @property
    def survey(self) -> SurveyParams:
        return SurveyParams(self.window, self.grid_step, self.tracer, self.classifier)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def load_function(self) -> TrigPolynomial:
        path = self.resolve(self.function)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"function: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"function: {path} is not valid JSON: {exc}") from None
        return function_from_dict(data, str(path))

    def planned_offsets(self, offsets) -> tuple[float, ...]:
        """Offsets with the optional seeded jitter of the base point applied."""
        offsets = tuple(float(o) for o in offsets)
        if not self.jitter:
            return offsets
        rng = np.random.default_rng(self.seed)
        return tuple(float(o + d) for o, d in zip(offsets, rng.uniform(-self.jitter, self.jitter, len(offsets))))

    def to_dict(self) -> dict:
        d = {"function": self.function, "levels": list(self.levels)}
        if self.plane is not None:
            d["plane"] = {"forms": [list(v) for v in self.plane.forms], "offsets": list(self.plane.offsets)}
        if self.grid is not None:
            g = self.grid
            d["grid"] = {
                "baseForms": [list(v) for v in g.base_forms],
                "generators": [list(v) for v in g.generators],
                "radius": g.radius,
                "resolution": g.resolution,
                "offsets": list(g.offsets),
            }
        t = self.tracer
        c = self.classifier
        r = self.render
        d.update(
            window=self.window,
            gridStep=self.grid_step,
            tracer={"step": t.step, "closureTol": t.closure_tol, "sMin": t.s_min, "sMax": t.s_max,
                    "gradFloor": t.grad_floor},
            classifier={"ratioTol": c.ratio_tol, "maxNorm": c.max_norm, "tol": c.tol, "minArc": c.min_arc,
                        "ambiguityFactor": c.ambiguity_factor, "boundTol": c.bound_tol},
            render={"size": r.size, "margin": r.margin, "stroke": r.stroke, "boundaryStroke": r.boundary_stroke,
                    "stripBoundaries": r.strip_boundaries, "decimals": r.decimals},
            out=self.out_dir,
            svg=self.svg,
            decimate=self.decimate,
            workers=self.workers,
            seed=self.seed,
            jitter=self.jitter,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: expected a JSON object")
        p = _Reader(d, "")
        plane = grid = None
        if "plane" in d:
            q = p.sub("plane")
            plane = PlaneConfig(q.vectors("forms"), q.reals("offsets"))
        if "grid" in d:
            q = p.sub("grid")
            grid = GridConfig(q.vectors("baseForms"), q.vectors("generators"), q.real("radius"),
                              q.integer("resolution"), q.reals("offsets"))
        t = p.sub("tracer", optional=True)
        c = p.sub("classifier", optional=True)
        r = p.sub("render", optional=True)
        td = TraceParams(s_max=5000.0)
        cd = ClassifierConfig()
        rd = RenderSpec()
        cfg = cls(
            function=p.string("function"),
            levels=p.reals("levels"),
            plane=plane,
            grid=grid,
            window=p.real("window", 1.0),
            grid_step=p.real("gridStep", 0.05),
            tracer=TraceParams(
                step=t.real("step", td.step),
                closure_tol=t.real("closureTol", td.closure_tol),
                s_min=t.real("sMin", None),
                s_max=t.real("sMax", td.s_max),
                grad_floor=t.real("gradFloor", td.grad_floor),
            ),
            classifier=ClassifierConfig(
                ratio_tol=c.real("ratioTol", cd.ratio_tol),
                max_norm=c.integer("maxNorm", cd.max_norm),
                tol=c.real("tol", cd.tol),
                min_arc=c.real("minArc", cd.min_arc),
                ambiguity_factor=c.real("ambiguityFactor", cd.ambiguity_factor),
                bound_tol=c.real("boundTol", cd.bound_tol),
            ),
            render=RenderSpec(
                size=r.integer("size", rd.size),
                margin=r.integer("margin", rd.margin),
                stroke=r.real("stroke", rd.stroke),
                boundary_stroke=r.real("boundaryStroke", rd.boundary_stroke),
                strip_boundaries=r.boolean("stripBoundaries", rd.strip_boundaries),
                decimals=r.integer("decimals", rd.decimals),
            ),
            out_dir=p.string("out", "out"),
            svg=p.boolean("svg", False),
            decimate=p.integer("decimate", 10),
            workers=p.integer("workers", 1),
            seed=p.integer("seed", None),
            jitter=p.real("jitter", 0.0),
            base_dir=base_dir,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        checks = [
            ("window", self.window > 0),
            ("gridStep", 0 < self.grid_step < self.window),
            ("tracer.step", self.tracer.step > 0),
            ("tracer.closureTol", self.tracer.closure_tol > 0),
            ("tracer.sMin", self.tracer.s_min is None or self.tracer.s_min >= 0),
            ("tracer.sMax", self.tracer.s_max > 0),
            ("tracer.gradFloor", self.tracer.grad_floor >= 0),
            ("classifier.ratioTol", self.classifier.ratio_tol >= 1),
            ("classifier.maxNorm", 1 <= self.classifier.max_norm <= 50),
            ("classifier.tol", self.classifier.tol > 0),
            ("classifier.minArc", self.classifier.min_arc > 0),
            ("classifier.ambiguityFactor", self.classifier.ambiguity_factor >= 1),
            ("classifier.boundTol", self.classifier.bound_tol >= 1),
            ("render.size", self.render.size > 2 * self.render.margin >= 0),
            ("render.decimals", 0 <= self.render.decimals <= 12),
            ("decimate", self.decimate >= 1),
            ("workers", self.workers >= 1),
            ("seed", self.seed is None or 0 <= self.seed <= U64_MAX),
            ("jitter", self.jitter >= 0),
            ("levels", len(self.levels) >= 1),
        ]
        if self.grid is not None:
            checks += [("grid.radius", self.grid.radius >= 0), ("grid.resolution", self.grid.resolution >= 1)]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"{name}: value out of range")


class _Reader:
    """Typed field access on a JSON object with path-qualified errors."""

    def __init__(self, d: dict, prefix: str):
        self.d = d
        self.prefix = prefix

    def _name(self, key):
        return f"{self.prefix}{key}"

    def _get(self, key, default, required):
        if key not in self.d:
            if required:
                raise ConfigError(f"{self._name(key)}: missing required field")
            return default, False
        return self.d[key], True

    def sub(self, key, optional=False) -> "_Reader":
        v, present = self._get(key, {}, not optional)
        if not isinstance(v, dict):
            raise ConfigError(f"{self._name(key)}: expected an object")
        return _Reader(v, f"{self._name(key)}.")

    def string(self, key, default=...):
        v, present = self._get(key, default, default is ...)
        if present and not isinstance(v, str):
            raise ConfigError(f"{self._name(key)}: expected a string")
        return v

    def boolean(self, key, default):
        v, present = self._get(key, default, False)
        if present and not isinstance(v, bool):
            raise ConfigError(f"{self._name(key)}: expected true or false")
        return v

    def real(self, key, default=...):
        v, present = self._get(key, default, default is ...)
        if not present or v is None:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ConfigError(f"{self._name(key)}: expected a finite number")
        return float(v)

    def integer(self, key, default=...):
        v, present = self._get(key, default, default is ...)
        if not present or v is None:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._name(key)}: expected an integer")
        return v

    def reals(self, key):
        v, _ = self._get(key, None, True)
        if not isinstance(v, list) or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in v):
            raise ConfigError(f"{self._name(key)}: expected a list of numbers")
        return tuple(float(e) for e in v)

    def vectors(self, key):
        v, _ = self._get(key, None, True)
        if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
            raise ConfigError(f"{self._name(key)}: expected a list of coefficient lists")
        for i, row in enumerate(v):
            if not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in row):
                raise ConfigError(f"{self._name(key)}[{i}]: expected numbers")
        return tuple(tuple(row) for row in v)


def function_from_dict(data, source: str = "function") -> TrigPolynomial:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a JSON object with m and harmonics")
    try:
        return TrigPolynomial.from_dict(data)
    except KeyError as exc:
        raise ConfigError(f"{source}: missing field {exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from None
    return RunConfig.from_dict(data, base_dir=str(path.parent))


# ---------------------------------------------------------------------------
# result serialization


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _floats(a) -> list:
    return np.asarray(a, float).tolist()


def trajectory_to_dict(tr: Trajectory, label=None, decimate: int = 10) -> dict:
    """Every ``decimate``-th point plus both endpoints at full precision."""
    pts = tr.points
    idx = list(range(0, len(pts), decimate))
    if idx[-1] != len(pts) - 1:
        idx.append(len(pts) - 1)
    d = {
        "level": tr.level,
        "termination": tr.termination.value,
        "arcLength": tr.arc_length,
        "closureError": tr.closure_error,
        "start": _floats(pts[0]),
        "end": _floats(pts[-1]),
        "decimate": decimate,
        "points": _floats(pts[idx]),
    }
    if label is not None:
        d["label"] = label.to_dict()
    return d


def plane_to_dict(plane: PlaneSpec) -> dict:
    return {
        "forms": [list(f.coefficients) for f in plane.forms],
        "offsets": list(plane.offsets),
        "basePoint": _floats(plane.base_point),
        "u1": _floats(plane.u1),
        "u2": _floats(plane.u2),
    }


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def records_to_csv(records, m: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        n = list(r.normal) if r.normal is not None else []
        ns = [str(e) for e in n] + [""] * (4 - len(n))
        w.writerow([r.i, r.j, repr(r.s), repr(r.t), repr(r.level), r.kind, *ns, _num(r.residual),
                    r.orientation_sign, r.seeds, r.unresolved])
    return buf.getvalue()


def zone_maps(result: ScanResult) -> list:
    return [build_zone_map(result.records, c, result.grid.shape, result.invalid) for c in result.levels]


# ---------------------------------------------------------------------------
# commands


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    log.info("wrote %s", p)
    return p


def _plane(cfg: RunConfig, f: TrigPolynomial) -> PlaneSpec:
    if any(len(v) != f.m for v in cfg.plane.forms):
        raise ConfigError(f"plane.forms: each form needs {f.m} coefficients to match the function")
    return replace(cfg.plane, offsets=cfg.planned_offsets(cfg.plane.offsets)).build()


def command_trace(cfg: RunConfig) -> int:
    if cfg.plane is None:
        raise ConfigError("plane: missing required field for trace")
    f = cfg.load_function()
    plane = _plane(cfg, f)
    g = restrict(f, plane)
    sp = cfg.survey
    blocks = []
    for c in cfg.levels:
        find_seeds(g, c, sp.window, sp.grid_step, sp.trace)  # EmptyLevel surfaces here
        pairs = survey_level(f, plane, c, sp)
        blocks.append({
            "level": c,
            "trajectories": [trajectory_to_dict(tr, lab, cfg.decimate) for tr, lab in pairs],
        })
    out = cfg.resolve(cfg.out_dir)
    _write(out, "trajectories.json", dumps({"plane": plane_to_dict(plane), "levels": blocks}))
    if cfg.svg:
        _render_trajectory_blocks(blocks, cfg, out)
    return EXIT_OK


def _render_trajectory_blocks(blocks, cfg: RunConfig, out: Path) -> None:
    for k, b in enumerate(blocks):
        if b["trajectories"]:
            _write(out, f"trajectories_{k}.svg", render_trajectories(b["trajectories"], cfg.render))


def command_scan(cfg: RunConfig) -> int:
    if cfg.grid is None:
        raise ConfigError("grid: missing required field for scan")
    f = cfg.load_function()
    if any(len(v) != f.m for v in cfg.grid.base_forms + cfg.grid.generators):
        raise ConfigError(f"grid.baseForms: each form needs {f.m} coefficients to match the function")
    grid = replace(cfg.grid, offsets=cfg.planned_offsets(cfg.grid.offsets)).build()
    result = scan_directions(f, grid, cfg.levels, cfg.survey, workers=cfg.workers)
    out = cfg.resolve(cfg.out_dir)
    _write(out, "scan.csv", records_to_csv(result.records, f.m))
    maps = zone_maps(result)
    zdoc = {"invalid": [list(ij) for ij in result.invalid], "zoneMaps": [z.to_dict() for z in maps]}
    _write(out, "zones.json", dumps(zdoc))
    if cfg.svg:
        for k, z in enumerate(maps):
            _write(out, f"zones_{k}.svg", render_zone_map(z.to_dict(), cfg.render))
    return EXIT_OK


def command_crit(cfg: RunConfig) -> int:
    if cfg.plane is None:
        raise ConfigError("plane: missing required field for crit")
    f = cfg.load_function()
    plane = _plane(cfg, f)
    g = restrict(f, plane)
    scan = find_critical_points(g, cfg.window)

    def point(p):
        return {"y": list(p.y), "value": p.value, "morseIndex": p.morse_index, "hessianDet": p.hessian_det,
                "gradNorm": float(np.hypot(*g.gradient(np.array(p.y))))}

    doc = {
        "degenerate": scan.degenerate,
        "values": sorted(p.value for p in scan.points),
        "points": [point(p) for p in scan.points],
        "nonMorse": [] if scan.degenerate else [point(p) for p in scan.non_morse],
        "nonMorseCount": len(scan.non_morse),
    }
    _write(cfg.resolve(cfg.out_dir), "critical.json", dumps(doc))
    return EXIT_OK


def command_render(cfg: RunConfig) -> int:
    """Re-render SVGs from result files already in the output directory."""
    out = cfg.resolve(cfg.out_dir)
    done = 0
    tj = out / "trajectories.json"
    if tj.exists():
        _render_trajectory_blocks(json.loads(tj.read_text())["levels"], cfg, out)
        done += 1
    zj = out / "zones.json"
    if zj.exists():
        for k, z in enumerate(json.loads(zj.read_text())["zoneMaps"]):
            _write(out, f"zones_{k}.svg", render_zone_map(z, cfg.render))
        done += 1
    if not done:
        raise EmptyInputError(f"nothing to render in {out}: run trace or scan first")
    return EXIT_OK


COMMANDS = {"trace": command_trace, "scan": command_scan, "crit": command_crit, "render": command_render}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qlev", description="Level curves of quasiperiodic functions on planes.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="run configuration (JSON)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--svg", action="store_true", help="also write SVG figures")
    ap.add_argument("--seed", type=int, help="u64 seed for the base-point jitter")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        over = {}
        if args.out is not None:
            over["out_dir"] = str(Path(args.out).resolve())
        if args.svg:
            over["svg"] = True
        if args.seed is not None:
            over["seed"] = args.seed
        if over:
            cfg = replace(cfg, **over)
            cfg.validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"qlev: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyLevelError as exc:
        print(f"qlev: empty level: {exc}", file=sys.stderr)
        return EXIT_EMPTY_LEVEL
    except DegeneratePlaneError as exc:
        print(f"qlev: degenerate plane: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE_PLANE
    except (LatticeError, EmptyInputError) as exc:
        print(f"qlev: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())
