"""Sweeps over direction space and over levels: stability-zone maps and
singular-level reports."""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    AmbiguousLabelError,
    Kind,
    LevelReport,
    NoCandidateError,
    SurveyParams,
    label_level,
    level_consistency,
    resolve_normal,
    survey_level,
)
from .lattice import DegeneratePlaneError, LinearForm, PlaneSpec, build_plane
from .qpfunction import find_critical_points, restrict

NEAR_SINGULAR_EPS = 1e-3

ALL_COMPACT = "AllCompact"


class IncompleteGridError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionGrid:
    """Samples l1 + s p1, l2 + t p2 for (s, t) on a resolution x resolution
    grid over [-radius, radius]^2 (m = 4), or l1 + s p1 alone along s for
    m = 3 (t is then fixed at 0 and resolution applies per axis anyway)."""

    base_forms: tuple[LinearForm, ...]
    generators: tuple[LinearForm, ...]
    radius: float
    resolution: int
    offsets: tuple[float, ...]

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if len(self.base_forms) != len(self.generators):
            raise ValueError("one generator per base form")
        if len(self.offsets) != len(self.base_forms):
            raise ValueError("one offset per base form")

    @property
    def ticks(self) -> np.ndarray:
        if self.resolution == 1:
            return np.zeros(1)
        return np.linspace(-self.radius, self.radius, self.resolution)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.resolution, self.resolution)

    def params(self, i: int, j: int) -> tuple[float, float]:
        return float(self.ticks[i]), float(self.ticks[j])

    def plane(self, i: int, j: int) -> PlaneSpec:
        """Plane at sample (i, j); raises DegeneratePlaneError for dependent forms."""
        s, t = self.params(i, j)
        amounts = (s, t)[: len(self.base_forms)]
        forms = [b.perturbed(p, a) for b, p, a in zip(self.base_forms, self.generators, amounts)]
        return build_plane(forms, self.offsets)

    def neighbors(self, i: int, j: int):
        n = self.resolution
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            a, b = i + di, j + dj
            if 0 <= a < n and 0 <= b < n:
                yield a, b


@dataclass(frozen=True)
class ScanRecord:
    i: int
    j: int
    s: float
    t: float
    level: float
    kind: str
    normal: tuple[int, ...] | None
    residual: float | None
    orientation_sign: int
    seeds: int
    unresolved: int
    note: str = ""

    @property
    def legend(self) -> str:
        if self.kind == Kind.OPEN_STRIP.value and self.normal is not None:
            return "n=" + ",".join(str(e) for e in self.normal)
        return self.kind


@dataclass
class ScanResult:
    grid: DirectionGrid
    levels: list[float]
    records: list[ScanRecord]
    invalid: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class _SampleSurvey:
    """Per-(sample, level) raw material for the labeling reduction."""

    seeds: int
    unresolved: int
    compact: int
    directions: list
    signs: list
    error: str = ""


def _survey_sample(args):
    f, grid, i, j, levels, sp = args
    try:
        plane = grid.plane(i, j)
    except DegeneratePlaneError:
        return None
    out = []
    for c in levels:
        try:
            res = survey_level(f, plane, c, sp)
        except Exception as exc:  # recorded, never aborts the sweep
            out.append(_SampleSurvey(0, 0, 0, [], [], f"{type(exc).__name__}: {exc}"))
            continue
        dirs = [lab.fit.lifted_direction.tolist() for _, lab in res if lab.kind is Kind.OPEN_STRIP]
        signs = [lab.orientation_sign for _, lab in res if lab.kind is Kind.OPEN_STRIP]
        out.append(
            _SampleSurvey(
                len(res),
                sum(lab.kind is Kind.UNRESOLVED for _, lab in res),
                sum(lab.kind is Kind.COMPACT for _, lab in res),
                dirs,
                signs,
            )
        )
    return out


def scan_directions(f, grid: DirectionGrid, levels, sp: SurveyParams = SurveyParams(),
                    workers: int = 1) -> ScanResult:
    """Classify every valid grid sample at every level.

    Each sample's open-strip directions are pooled with those of its four
    grid neighbors to extract its integral normal. Records come out ordered
    by (i, j, level) whatever the worker count.
    """
    levels = [float(c) for c in levels]
    if not levels:
        raise ValueError("at least one level is required")
    n = grid.resolution
    jobs = [(f, grid, i, j, levels, sp) for i in range(n) for j in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            raw = list(ex.map(_survey_sample, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        raw = [_survey_sample(job) for job in jobs]
    surveys = {(job[2], job[3]): r for job, r in zip(jobs, raw)}
    invalid = [key for key, r in surveys.items() if r is None]

    records = []
    for i in range(n):
        for j in range(n):
            own = surveys[(i, j)]
            if own is None:
                continue
            plane = grid.plane(i, j)
            s, t = grid.params(i, j)
            for li, c in enumerate(levels):
                sv = own[li]
                records.append(_label_record(grid, surveys, plane, i, j, s, t, li, c, sv, sp))
    return ScanResult(grid, levels, records, sorted(invalid))


def _label_record(grid, surveys, plane, i, j, s, t, li, c, sv: _SampleSurvey, sp) -> ScanRecord:
    base = dict(i=i, j=j, s=s, t=t, level=c, seeds=sv.seeds, unresolved=sv.unresolved)
    if sv.error:
        return ScanRecord(kind="Error", normal=None, residual=None, orientation_sign=0, note=sv.error, **base)
    if sv.seeds == 0:
        return ScanRecord(kind="Empty", normal=None, residual=None, orientation_sign=0, **base)
    if not sv.directions:
        kind = ALL_COMPACT if sv.unresolved == 0 else Kind.UNRESOLVED.value
        return ScanRecord(kind=kind, normal=None, residual=None, orientation_sign=0, **base)
    dirs = list(sv.directions)
    for a, b in grid.neighbors(i, j):
        nb = surveys.get((a, b))
        if nb is not None:
            dirs.extend(nb[li].directions)
    sign = sv.signs[0]
    try:
        best, _ = resolve_normal(np.array(dirs), plane, sp.classify)
    except AmbiguousLabelError as exc:
        return ScanRecord(kind="Ambiguous", normal=None, residual=None, orientation_sign=sign, note=str(exc), **base)
    except NoCandidateError as exc:
        return ScanRecord(kind="NoCandidate", normal=None, residual=None, orientation_sign=sign, note=str(exc), **base)
    return ScanRecord(kind=Kind.OPEN_STRIP.value, normal=best.normal, residual=best.residual,
                      orientation_sign=sign, **base)


@dataclass
class ZoneMap:
    level: float
    zone_ids: np.ndarray
    legend: dict[int, str]
    boundary: np.ndarray

    def zone_of(self, i: int, j: int) -> int:
        return int(self.zone_ids[i, j])

    def area(self, zone: int) -> int:
        return int(np.sum(self.zone_ids == zone))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "zones": self.zone_ids.tolist(),
            "legend": {str(k): v for k, v in sorted(self.legend.items())},
            "boundary": self.boundary.astype(int).tolist(),
        }


INVALID = "Invalid"


def build_zone_map(records, level: float, shape: tuple[int, int], invalid=()) -> ZoneMap:
    """Flood-fill 4-connected regions of equal legend at one level."""
    n1, n2 = shape
    labels = np.full(shape, None, dtype=object)
    for r in records:
        if r.level == level:
            labels[r.i, r.j] = r.legend
    for i, j in invalid:
        labels[i, j] = INVALID
    missing = [(i, j) for i in range(n1) for j in range(n2) if labels[i, j] is None]
    if missing:
        raise IncompleteGridError(f"level {level}: {len(missing)} samples without records, e.g. {missing[0]}")
    zones = np.full(shape, -1, dtype=int)
    legend: dict[int, str] = {}
    nz = 0
    for i in range(n1):
        for j in range(n2):
            if zones[i, j] >= 0:
                continue
            key = labels[i, j]
            zones[i, j] = nz
            queue = deque([(i, j)])
            while queue:
                a, b = queue.popleft()
                for da, db in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    x, y = a + da, b + db
                    if 0 <= x < n1 and 0 <= y < n2 and zones[x, y] < 0 and labels[x, y] == key:
                        zones[x, y] = nz
                        queue.append((x, y))
            legend[nz] = key
            nz += 1
    boundary = np.zeros(shape, bool)
    boundary[:-1, :] |= zones[:-1, :] != zones[1:, :]
    boundary[1:, :] |= zones[1:, :] != zones[:-1, :]
    boundary[:, :-1] |= zones[:, :-1] != zones[:, 1:]
    boundary[:, 1:] |= zones[:, 1:] != zones[:, :-1]
    return ZoneMap(float(level), zones, legend, boundary)


@dataclass
class LevelScan:
    levels: list[float]
    critical_values: list[float]
    near_singular: list[float]
    reports: dict[float, LevelReport]
    non_morse: int = 0


def near_singular_levels(levels, critical_values, eps: float = NEAR_SINGULAR_EPS) -> list[float]:
    cv = np.asarray(critical_values, float)
    if not len(cv):
        return []
    return [c for c in levels if np.min(np.abs(cv - c)) < eps]


def scan_levels(f, plane: PlaneSpec, c_min: float, c_max: float, count: int,
                sp: SurveyParams = SurveyParams(), perturbations=(), eps: float = NEAR_SINGULAR_EPS,
                crit_step: float | None = None) -> LevelScan:
    """Classify count evenly spaced levels; levels within eps of a critical
    value of g in the window are flagged near-singular and get no
    consistency verdict."""
    if count < 2:
        raise ValueError("count must be >= 2")
    levels = [float(c) for c in np.linspace(c_min, c_max, count)]
    g = restrict(f, plane)
    crit = find_critical_points(g, sp.window, crit_step)
    cvals = [p.value for p in crit.points] + [p.value for p in crit.non_morse]
    singular = near_singular_levels(levels, cvals, eps)
    reports = {}
    for c in levels:
        if c in singular:
            continue
        if perturbations:
            reports[c] = label_level(f, plane, c, list(perturbations), sp)
        else:
            reports[c] = level_consistency([lab for _, lab in survey_level(f, plane, c, sp)], level=c)
    return LevelScan(levels, sorted(cvals), singular, reports, len(crit.non_morse))
