"""Topological classification of traced level components: compact versus
strip-confined open, minimal strip fitting, integer hyperplane labels and
per-level label consistency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .lattice import Candidate, PlaneSpec, in_plane_component, rationalize_common_normal
from .qpfunction import restrict
from .tracer import (
    EmptyLevelError,
    SeedOffLevelError,
    StalledCorrectionError,
    Termination,
    TraceParams,
    TracerError,
    Trajectory,
    find_seeds,
    trace_robust,
)

WIDTH_EPS = 1e-9
TIE_RTOL = 1e-9


class ClassifierError(RuntimeError):
    pass


class DegeneratePointSetError(ClassifierError):
    pass


class AmbiguousLabelError(ClassifierError):
    def __init__(self, msg, candidates=()):
        super().__init__(msg)
        self.candidates = list(candidates)


class NoCandidateError(ClassifierError):
    pass


@dataclass(frozen=True)
class StripFit:
    direction2: np.ndarray
    width: float
    lifted_direction: np.ndarray | None = None

    @property
    def angle(self) -> float:
        return math.atan2(self.direction2[1], self.direction2[0])


def _angle_mod_pi(d) -> float:
    a = math.atan2(d[1], d[0]) % math.pi
    return 0.0 if a >= math.pi - 1e-15 else a


def _hull(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices in counterclockwise order; None when the points
    are collinear."""
    try:
        h = ConvexHull(points)
    except QhullError:
        return None
    return points[h.vertices]


def strip_fit(points) -> StripFit:
    """Narrowest strip between two parallel lines containing all points.

    The optimum has one side flush with a hull edge, so rotating calipers
    over the hull edges is exact. Ties go to the smallest direction angle
    in [0, pi).
    """
    pts = np.asarray(points, float)
    if len(pts) < 2 or np.all(np.ptp(pts, axis=0) == 0):
        raise DegeneratePointSetError("strip fit needs at least two distinct points")
    center = pts.mean(axis=0)
    hull = _hull(pts - center)
    if hull is None:
        _, _, vt = np.linalg.svd(pts - center, full_matrices=False)
        a = _angle_mod_pi(vt[0])
        d = np.array([math.cos(a), math.sin(a)])
        return StripFit(d, _width_along(pts, d))
    n = len(hull)
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    units = edges / lengths[:, None]
    widths = np.empty(n)
    j = 1
    for i in range(n):
        u = units[i]
        # height of vertex k above edge i; advance the antipodal pointer while it grows
        def height(k):
            v = hull[k % n] - hull[i]
            return u[0] * v[1] - u[1] * v[0]

        if j <= i:
            j = i + 1
        while height(j + 1) >= height(j):
            j += 1
            if j > i + n:
                break
        widths[i] = height(j)
    wmin = widths.min()
    ties = np.nonzero(widths <= wmin + TIE_RTOL * max(wmin, 1.0))[0]
    best = min(ties, key=lambda i: (_angle_mod_pi(units[i]), i))
    a = _angle_mod_pi(units[best])
    d = np.array([math.cos(a), math.sin(a)])
    return StripFit(d, _width_along(pts, d))


def _width_along(pts: np.ndarray, d: np.ndarray) -> float:
    proj = pts @ np.array([-d[1], d[0]])
    return float(proj.max() - proj.min())


def angle_scan_width(points, n_angles: int = 10_000):
    """Minimum strip width over n evenly spaced directions in [0, pi)."""
    pts = np.asarray(points, float)
    ang = np.arange(n_angles) * (math.pi / n_angles)
    normals = np.column_stack([-np.sin(ang), np.cos(ang)])
    proj = pts @ normals.T
    w = proj.max(axis=0) - proj.min(axis=0)
    i = int(np.argmin(w))
    return float(w[i]), float(ang[i])


def _half_by_arc(points: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.diff(points, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return points[: int(np.searchsorted(s, s[-1] / 2, side="right"))]


@dataclass(frozen=True)
class Convergence:
    converged: bool
    width_half: float
    width_full: float

    @property
    def ratio(self) -> float:
        return self.width_full / max(self.width_half, WIDTH_EPS)

    def __bool__(self) -> bool:
        return self.converged


def width_converged(trajectory, ratio_tol: float = 1.1, min_arc: float = 100.0) -> Convergence:
    """Width saturation test: the strip of the first half (by arc length)
    must already be within ratio_tol of the strip of the whole curve.

    Accepts a Trajectory (must be BudgetExhausted with enough arc length)
    or a bare (N, 2) point array.
    """
    if isinstance(trajectory, Trajectory):
        if trajectory.termination is not Termination.BUDGET:
            raise ValueError("width convergence applies to budget-exhausted trajectories only")
        if trajectory.arc_length < min_arc:
            raise ValueError(f"arc length {trajectory.arc_length:.1f} < {min_arc}")
        pts = trajectory.points
    else:
        pts = np.asarray(trajectory, float)
    full = strip_fit(pts).width
    half = strip_fit(_half_by_arc(pts)).width
    return Convergence(full / max(half, WIDTH_EPS) <= ratio_tol, half, full)


def boundedness_ratio(lifted: np.ndarray, normal) -> float:
    """range of <n, x> over the whole curve / range over its first half."""
    n = np.asarray(normal, float)
    vals = lifted @ n
    # arc length in R^m equals plane arc length for an orthonormal lift
    seg = np.linalg.norm(np.diff(lifted, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    half = vals[: int(np.searchsorted(s, s[-1] / 2, side="right"))]
    r_half = float(half.max() - half.min())
    r_full = float(vals.max() - vals.min())
    return r_full / max(r_half, WIDTH_EPS)


class Kind(str, Enum):
    COMPACT = "Compact"
    OPEN_STRIP = "OpenStrip"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class ClassifierConfig:
    ratio_tol: float = 1.1
    max_norm: int = 10
    tol: float = 5e-4
    min_arc: float = 100.0
    ambiguity_factor: float = 10.0
    bound_tol: float = 1.1


@dataclass
class StripLabel:
    kind: Kind
    fit: StripFit | None = None
    candidates: list[Candidate] = field(default_factory=list)
    orientation_sign: int = 0
    reason: str | None = None
    convergence: Convergence | None = None
    resolved: bool | None = None
    bound_ratio: float | None = None

    @property
    def normal(self) -> tuple[int, ...] | None:
        return self.candidates[0].normal if self.candidates else None

    @property
    def residual(self) -> float | None:
        return self.candidates[0].residual if self.candidates else None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.fit is not None:
            d.update(
                width=self.fit.width,
                direction2=[float(v) for v in self.fit.direction2],
                liftedDirection=None if self.fit.lifted_direction is None
                else [float(v) for v in self.fit.lifted_direction],
            )
        if self.kind is Kind.OPEN_STRIP:
            # a normal is only reported once it is unique
            ok = self.resolved is not False and self.normal is not None
            d.update(
                normal=list(self.normal) if ok else None,
                residual=self.residual if ok else None,
                orientationSign=self.orientation_sign,
                resolved=bool(ok),
            )
        if self.reason:
            d["reason"] = self.reason
        return d


def canonical_direction(v) -> np.ndarray:
    """Orient a direction so its largest-magnitude entry is positive; among
    entries tied to 1e-6 relative, the first one decides."""
    v = np.asarray(v, float)
    a = np.abs(v)
    i = int(np.argmax(a >= (1 - 1e-6) * a.max()))
    return v if v[i] >= 0 else -v


def _plane_candidates(dirs, plane: PlaneSpec | None, cfg: ClassifierConfig) -> list[Candidate]:
    cands = rationalize_common_normal(dirs, cfg.max_norm, cfg.tol)
    if plane is None:
        return cands
    # hyperplanes containing the whole plane say nothing about the strip
    return [c for c in cands if np.linalg.norm(in_plane_component(c.normal, plane)) >= cfg.tol]


def classify(trajectory: Trajectory, cfg: ClassifierConfig = ClassifierConfig(),
             extra_directions=()) -> StripLabel:
    """Compact for closed curves; OpenStrip for budget-exhausted curves with a
    saturated width; Unresolved otherwise, with the cause recorded.

    ``extra_directions`` (lifted unit vectors from sibling trajectories under
    small plane perturbations) are pooled with this curve's direction when
    rationalizing its hyperplane normal.
    """
    term = trajectory.termination
    if term is Termination.CLOSED:
        return StripLabel(Kind.COMPACT)
    if term is Termination.NEAR_CRITICAL:
        return StripLabel(Kind.UNRESOLVED, reason="NearCritical")
    if term is not Termination.BUDGET:
        return StripLabel(Kind.UNRESOLVED, reason=term.value)
    if trajectory.arc_length < cfg.min_arc:
        return StripLabel(Kind.UNRESOLVED, reason="ShortArc")
    conv = width_converged(trajectory, cfg.ratio_tol, cfg.min_arc)
    if not conv:
        return StripLabel(Kind.UNRESOLVED, reason="WidthNotConverged", convergence=conv)
    fit = strip_fit(trajectory.points)
    plane = trajectory.plane
    lifted = None
    cands: list[Candidate] = []
    sign = 0
    resolved = None
    reason = None
    if plane is not None:
        lifted = canonical_direction(plane.direction(fit.direction2))
        travel = trajectory.lifted_points[-1] - trajectory.lifted_points[0]
        sign = 1 if travel @ lifted >= 0 else -1
        dirs = [lifted] + [canonical_direction(d) for d in extra_directions]
        try:
            _, cands = resolve_normal(dirs, plane, cfg)
            resolved = True
        except AmbiguousLabelError as exc:
            cands, resolved, reason = exc.candidates, False, str(exc)
        except NoCandidateError as exc:
            resolved, reason = False, str(exc)
    fit = StripFit(fit.direction2, fit.width, lifted)
    return StripLabel(Kind.OPEN_STRIP, fit, cands, sign, reason=reason, convergence=conv, resolved=resolved)


# ---------------------------------------------------------------------------
# surveys over a level, perturbation labels, level reports


@dataclass(frozen=True)
class SurveyParams:
    """Where to look for components and how far to follow them."""

    window: float = 1.0
    grid_step: float = 0.05
    trace: TraceParams = TraceParams(s_max=5000.0)
    classify: ClassifierConfig = ClassifierConfig()


def survey_level(f, plane: PlaneSpec, c: float, sp: SurveyParams = SurveyParams()):
    """Trace and classify every component of {g = c} seeded in the window.

    Returns (trajectory, label) pairs in seed order; an empty level gives [].
    """
    g = restrict(f, plane)
    try:
        seeds = find_seeds(g, c, sp.window, sp.grid_step, sp.trace)
    except EmptyLevelError:
        return []
    out = []
    for seed in seeds:
        try:
            tr = trace_robust(g, c, seed, sp.trace)
        except StalledCorrectionError as exc:
            tr = Trajectory(float(c), np.atleast_2d(seed), 0.0, Termination.NEAR_CRITICAL, plane)
            out.append((tr, StripLabel(Kind.UNRESOLVED, reason=f"StalledCorrection: {exc}")))
            continue
        out.append((tr, classify(tr, sp.classify)))
    return out


def _direction_rank(dirs: np.ndarray, tol: float) -> int:
    sv = np.linalg.svd(np.atleast_2d(dirs), compute_uv=False)
    return int(np.sum(sv > tol))


def resolve_normal(dirs, plane: PlaneSpec | None, cfg: ClassifierConfig) -> tuple[Candidate, list[Candidate]]:
    """Unique integral normal common to a family of lifted strip directions.

    Raises AmbiguousLabelError when the directions leave more than a line of
    orthogonal complement or when the runner-up candidate is within
    ``ambiguity_factor`` of the best residual; NoCandidateError when nothing
    in the box fits.
    """
    d = np.array([canonical_direction(v) for v in dirs])
    m = d.shape[1]
    cands = _plane_candidates(d, plane, cfg)
    rank = _direction_rank(d, cfg.tol)
    if rank < m - 1:
        raise AmbiguousLabelError(
            f"{len(d)} direction(s) of rank {rank} leave a {m - rank}-dimensional orthogonal complement", cands
        )
    if not cands:
        raise NoCandidateError(f"no primitive normal with |n|_inf <= {cfg.max_norm} within tol {cfg.tol}")
    if len(cands) > 1 and cands[1].residual < cfg.ambiguity_factor * cands[0].residual:
        raise AmbiguousLabelError(
            f"candidates {cands[0].normal} ({cands[0].residual:.2e}) and {cands[1].normal} "
            f"({cands[1].residual:.2e}) are not separated", cands
        )
    return cands[0], cands


@dataclass
class HyperplaneLabel:
    normal: tuple[int, ...]
    residual: float
    candidates: list[Candidate]
    directions: np.ndarray = field(repr=False)
    bound_ratios: list[float] = field(default_factory=list)
    planes_used: int = 0

    @property
    def bounded(self) -> bool:
        return all(r < 1.1 for r in self.bound_ratios)


def label_by_perturbation(f, base_plane: PlaneSpec, c: float, perturbations, sp: SurveyParams = SurveyParams(),
                          surveys=None) -> HyperplaneLabel:
    """Integral hyperplane shared by the open strips of the base plane and of
    its perturbations at level c.

    Lifted strip directions from every plane are pooled; a unique normal
    needs them to span a hyperplane. Each contributing trajectory is then
    checked for boundedness of <n, x> (whole-curve range vs first-half range).
    ``surveys`` may supply precomputed survey_level results, one per plane.
    """
    planes = [base_plane, *perturbations]
    if surveys is None:
        surveys = [survey_level(f, p, c, sp) for p in planes]
    dirs, trajs = [], []
    used = 0
    for plane, res in zip(planes, surveys):
        opened = [(t, lab) for t, lab in res if lab.kind is Kind.OPEN_STRIP]
        if opened:
            used += 1
        for t, lab in opened:
            dirs.append(lab.fit.lifted_direction)
            trajs.append(t)
    if used < 3:
        raise NoCandidateError(f"only {used} plane(s) produced open strips at level {c}; need 3")
    best, cands = resolve_normal(np.array(dirs), base_plane, sp.classify)
    ratios = [boundedness_ratio(t.lifted_points, best.normal) for t in trajs]
    return HyperplaneLabel(best.normal, best.residual, cands, np.array(dirs), ratios, used)


def trace_sibling(f, plane: PlaneSpec, x, c: float, params: TraceParams) -> Trajectory:
    """Trace the component through the lifted point x on ``plane`` moved to
    pass through x."""
    moved = plane.through(x)
    g = restrict(f, moved)
    y = moved.project(x)
    if abs(g.evaluate(y) - c) >= 1e-8:
        raise SeedOffLevelError("lifted seed is off level on the perturbed plane")
    return trace_robust(g, c, y, params)


def label_level(f, plane: PlaneSpec, c: float, perturbations, sp: SurveyParams = SurveyParams(),
                survey=None) -> "LevelReport":
    """Per-trajectory labels at one level, each open strip labeled by pooling
    its direction with the directions of its siblings: the components through
    the same lifted seed on every perturbed plane."""
    if survey is None:
        survey = survey_level(f, plane, c, sp)
    labels = []
    for tr, lab in survey:
        if lab.kind is Kind.OPEN_STRIP:
            x = tr.lifted_points[0]
            dirs = [lab.fit.lifted_direction]
            sib_fail = None
            for p in perturbations:
                try:
                    st = trace_sibling(f, p, x, c, sp.trace)
                except TracerError as exc:
                    sib_fail = str(exc)
                    continue
                sl = classify(st, sp.classify)
                if sl.kind is Kind.OPEN_STRIP:
                    dirs.append(sl.fit.lifted_direction)
                else:
                    sib_fail = f"sibling {sl.kind.value}" + (f" ({sl.reason})" if sl.reason else "")
            try:
                best, cands = resolve_normal(np.array(dirs), plane, sp.classify)
                lab.candidates = cands
                lab.resolved = True
                lab.bound_ratio = boundedness_ratio(tr.lifted_points, best.normal)
            except (AmbiguousLabelError, NoCandidateError) as exc:
                lab.resolved = False
                lab.reason = str(exc) + (f"; {sib_fail}" if sib_fail else "")
        labels.append(lab)
    return level_consistency(labels, level=c)


@dataclass
class LevelReport:
    level: float
    labels: list[StripLabel]
    consistent: bool
    shared_normal: tuple[int, ...] | None
    signs: list[int]
    sign_balanced: bool
    notes: list[str] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        out = {k.value: 0 for k in Kind}
        for lab in self.labels:
            out[lab.kind.value] += 1
        return out


def level_consistency(labels, level: float = float("nan")) -> LevelReport:
    """Fold one level's labels: consistent iff every open strip carries the
    same canonical normal. The sign balance is reported, never enforced."""
    notes = []
    normals = []
    signs = []
    for i, lab in enumerate(labels):
        if lab.kind is not Kind.OPEN_STRIP:
            continue
        signs.append(lab.orientation_sign)
        if lab.normal is None or lab.resolved is False:
            notes.append(f"label {i}: open strip without a resolved normal")
            normals.append(None)
        else:
            normals.append(lab.normal)
    distinct = set(normals)
    consistent = len(distinct) <= 1 and None not in distinct
    shared = next(iter(distinct)) if consistent and distinct else None
    if len(distinct - {None}) > 1:
        notes.append(f"distinct normals {sorted(distinct - {None})}")
    balanced = signs.count(1) == signs.count(-1)
    return LevelReport(level, list(labels), consistent, shared, signs, balanced, notes)
