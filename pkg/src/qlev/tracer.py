"""Level-curve extraction for restricted functions.

Two independent routes: predictor-corrector continuation along the
Hamiltonian flow rot90(grad g), and a marching-squares grid extractor used
as an oracle for the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .qpfunction import RestrictedFunction


class Termination(str, Enum):
    CLOSED = "Closed"
    BUDGET = "BudgetExhausted"
    NEAR_CRITICAL = "NearCritical"
    LEFT_WINDOW = "LeftWindow"


_CODES = {
    K.CLOSED: Termination.CLOSED,
    K.BUDGET: Termination.BUDGET,
    K.NEAR_CRITICAL: Termination.NEAR_CRITICAL,
    K.LEFT_WINDOW: Termination.LEFT_WINDOW,
}


SEED_GRAD_FRACTION = 1e-3


class TracerError(RuntimeError):
    pass


class EmptyLevelError(TracerError):
    pass


class SeedOffLevelError(TracerError):
    pass


class StalledCorrectionError(TracerError):
    pass


@dataclass(frozen=True)
class TraceParams:
    step: float = 0.01
    closure_tol: float = 1e-5
    s_min: float | None = None  # defaults to 3 * step
    s_max: float = 1e4
    grad_floor: float = 1e-6

    @property
    def min_arc(self) -> float:
        return 3 * self.step if self.s_min is None else self.s_min

    def with_(self, **kw) -> "TraceParams":
        d = {**self.__dict__, **kw}
        return TraceParams(**d)


@dataclass
class Trajectory:
    level: float
    points: np.ndarray = field(repr=False)
    arc_length: float
    termination: Termination
    plane: object = field(default=None, repr=False)
    orient: int = 1

    @property
    def seed(self) -> np.ndarray:
        return self.points[0]

    @property
    def closure_error(self) -> float:
        return float(np.hypot(*(self.points[-1] - self.points[0])))

    @cached_property
    def lifted_points(self) -> np.ndarray:
        if self.plane is None:
            raise TracerError("trajectory has no plane attached")
        return self.plane.lift(self.points)

    def __len__(self) -> int:
        return len(self.points)


def _arrays(g: RestrictedFunction):
    return g.amp, g.w1, g.w2, np.ascontiguousarray(g.psi)


def trace(g: RestrictedFunction, c: float, seed, params: TraceParams = TraceParams(),
          orient: int = 1, window: float | None = None) -> Trajectory:
    """Follow the component of {g = c} through ``seed``.

    Unit-speed continuation of rot90(grad g)/|grad g| (reversed for
    orient=-1) with Newton correction after every step. Stops as Closed when
    the curve returns to the seed, BudgetExhausted at s_max, NearCritical
    when |grad g| drops below grad_floor, LeftWindow when leaving
    [-window, window]^2 (only if a window is given).
    """
    seed = np.asarray(seed, float)
    if abs(float(g.evaluate(seed)) - c) >= 1e-8:
        raise SeedOffLevelError(f"seed {seed} is off level {c}: g = {g.evaluate(seed)}")
    amp, w1, w2, psi = _arrays(g)
    pts, n, code, arc = K.trace_kernel(
        amp, w1, w2, psi, float(c), float(seed[0]), float(seed[1]), float(orient),
        params.step, params.closure_tol, params.min_arc, params.s_max, params.grad_floor,
        float(window) if window else 0.0,
    )
    if code == K.STALLED:
        raise StalledCorrectionError(
            f"correction failed after {K.MAX_HALVINGS} step halvings at arc length {arc:.3f}"
        )
    return Trajectory(float(c), np.array(pts[:n]), float(arc), _CODES[code], g.plane, orient)


def trace_robust(g, c, seed, params: TraceParams = TraceParams(), **kw) -> Trajectory:
    """trace(), retrying with a halved step on StalledCorrection."""
    p = params
    for _ in range(K.MAX_HALVINGS):
        try:
            return trace(g, c, seed, p, **kw)
        except StalledCorrectionError:
            p = p.with_(step=p.step / 2)
    return trace(g, c, seed, p, **kw)


@dataclass
class WindowComponent:
    """A level component clipped to the window, traced both ways from a seed."""

    seed: np.ndarray
    points: np.ndarray = field(repr=False)
    closed: bool
    termination: Termination

    @property
    def touches_boundary(self) -> bool:
        return not self.closed


def trace_in_window(g, c, seed, window: float, params: TraceParams = TraceParams()) -> WindowComponent:
    fwd = trace_robust(g, c, seed, params.with_(s_max=max(params.s_max, 1.0)), window=window)
    if fwd.termination is Termination.CLOSED:
        return WindowComponent(np.asarray(seed, float), fwd.points, True, fwd.termination)
    bwd = trace_robust(g, c, seed, params, orient=-1, window=window)
    pts = np.vstack([bwd.points[:0:-1], fwd.points])
    term = fwd.termination
    if bwd.termination is not Termination.LEFT_WINDOW:
        term = bwd.termination
    return WindowComponent(np.asarray(seed, float), pts, False, term)


def _sign_change_edges(ticks, values):
    pos = values > 0
    ys, xs = [], []
    ii, jj = np.nonzero(pos[:-1, :] != pos[1:, :])
    ys.append(np.column_stack([ticks[ii], ticks[jj]]))
    xs.append(np.column_stack([ticks[ii + 1], ticks[jj]]))
    ii, jj = np.nonzero(pos[:, :-1] != pos[:, 1:])
    ys.append(np.column_stack([ticks[ii], ticks[jj]]))
    xs.append(np.column_stack([ticks[ii], ticks[jj + 1]]))
    return np.vstack(ys), np.vstack(xs)


def _segment_distance(p, a, b):
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(*(a + t[:, None] * ab - p).T)


def _covered(cands: np.ndarray, pts: np.ndarray, radius: float, tol: float) -> np.ndarray:
    """Mask of candidates lying within tol of the polyline ``pts``."""
    out = np.zeros(len(cands), bool)
    if len(cands) == 0:
        return out
    tree = cKDTree(pts)
    dist, idx = tree.query(cands, distance_upper_bound=radius)
    near = np.nonzero(np.isfinite(dist))[0]
    if not len(near):
        return out
    j = idx[near]
    p = cands[near]
    lo = np.clip(j - 1, 0, len(pts) - 1)
    hi = np.clip(j + 1, 0, len(pts) - 1)
    d = np.minimum(_segment_distance(p, pts[lo], pts[j]), _segment_distance(p, pts[j], pts[hi]))
    out[near] = d < tol
    return out


def level_components(g: RestrictedFunction, c: float, window: float, grid_step: float,
                     params: TraceParams = TraceParams()):
    """Seeds, one per component of {g = c} meeting [-window, window]^2, and
    the window-clipped components traced from them."""
    if not grid_step < window:
        raise ValueError("grid step must be smaller than the window")
    ticks, values = g.grid(window, grid_step)
    values = values - c
    if not (values.min() < 0 < values.max()):
        raise EmptyLevelError(f"level {c} is outside the sampled range [{values.min() + c}, {values.max() + c}]")
    a, b = _sign_change_edges(ticks, values)
    amp, w1, w2, psi = _arrays(g)
    cands = K.bisect_edges(amp, w1, w2, psi, float(c), a, b, 1e-10 * 0.5)
    grads = g.gradient(cands)
    # crossings pinned to grid nodes sitting on saddles carry no usable tangent
    floor = max(params.grad_floor, SEED_GRAD_FRACTION * g.gradient_scale)
    cands = cands[np.hypot(grads[:, 0], grads[:, 1]) > floor]
    # deterministic candidate order: lexicographic in (y1, y2)
    cands = cands[np.lexsort((cands[:, 1], cands[:, 0]))]
    alive = np.ones(len(cands), bool)
    seeds, comps = [], []
    cover_tol = 0.05 * params.step
    for i in range(len(cands)):
        if not alive[i]:
            continue
        comp = trace_in_window(g, c, cands[i], window, params)
        seeds.append(cands[i].copy())
        comps.append(comp)
        alive[i] = False
        rest = np.nonzero(alive)[0]
        alive[rest[_covered(cands[rest], comp.points, 2 * params.step, cover_tol)]] = False
    if not seeds:
        raise EmptyLevelError(f"no regular crossings of level {c} in the window")
    return seeds, comps


def find_seeds(g: RestrictedFunction, c: float, window: float, grid_step: float,
               params: TraceParams = TraceParams()) -> list[np.ndarray]:
    return level_components(g, c, window, grid_step, params)[0]


# ---------------------------------------------------------------------------
# marching squares oracle


@dataclass
class GridComponent:
    polyline: np.ndarray = field(repr=False)
    closed: bool
    touches_boundary: bool


# corner order: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); edges: 0:(0,1) 1:(1,2) 2:(2,3) 3:(3,0)
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


def _cell_pairs(case: int, center_pos: bool):
    """Edge pairs joined inside a cell for a 4-bit corner case."""
    table = {
        0: (), 15: (),
        1: ((3, 0),), 14: ((3, 0),),
        2: ((0, 1),), 13: ((0, 1),),
        4: ((1, 2),), 11: ((1, 2),),
        8: ((2, 3),), 7: ((2, 3),),
        3: ((3, 1),), 12: ((3, 1),),
        6: ((0, 2),), 9: ((0, 2),),
    }
    if case in table:
        return table[case]
    # saddle cells: corners 0 and 2 share a sign, 1 and 3 the other
    corner0_pos = bool(case & 1)
    if center_pos == corner0_pos:
        # center joins corners 0 and 2: cut off corners 1 and 3
        return ((0, 1), (2, 3))
    return ((3, 0), (1, 2))


def marching_squares(g: RestrictedFunction, c: float, window: float, grid_step: float) -> list[GridComponent]:
    """Contour components of {g = c} on the grid over [-window, window]^2.

    Linear interpolation on cell edges; saddle cells are resolved by the
    sign of g at the cell center; segments are chained through shared edges.
    """
    if not grid_step < window:
        raise ValueError("grid step must be smaller than the window")
    ticks, values = g.grid(window, grid_step)
    v = values - c
    pos = v > 0
    n = len(ticks) - 1

    def crossing(edge_key):
        (i0, j0), (i1, j1) = edge_key
        a, b = v[i0, j0], v[i1, j1]
        t = a / (a - b)
        return np.array([ticks[i0] + t * (ticks[i1] - ticks[i0]), ticks[j0] + t * (ticks[j1] - ticks[j0])])

    case = (pos[:-1, :-1].astype(int) | (pos[1:, :-1] << 1) | (pos[1:, 1:] << 2) | (pos[:-1, 1:] << 3))
    active = np.argwhere((case != 0) & (case != 15))
    adj: dict = {}
    for i, j in active:
        cs = int(case[i, j])
        corners = ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))
        center_pos = None
        if cs in (5, 10):
            mid = np.array([ticks[i] + grid_step / 2, ticks[j] + grid_step / 2])
            center_pos = bool(g.evaluate(mid) - c > 0)
        for e1, e2 in _cell_pairs(cs, center_pos):
            k1 = tuple(sorted(corners[x] for x in _EDGE_CORNERS[e1]))
            k2 = tuple(sorted(corners[x] for x in _EDGE_CORNERS[e2]))
            adj.setdefault(k1, []).append(k2)
            adj.setdefault(k2, []).append(k1)

    def on_boundary(key):
        (i0, j0), (i1, j1) = key
        return (i0 == i1 and i0 in (0, n)) or (j0 == j1 and j0 in (0, n))

    visited = set()
    comps = []
    # open chains start from boundary edges (degree 1), then closed loops
    starts = sorted(k for k, nb in adj.items() if len(nb) == 1) + sorted(adj)
    for start in starts:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        closed = False
        while True:
            nxt = [k for k in adj[cur] if k != prev or adj[cur].count(k) > 1]
            step = None
            for k in nxt:
                if k not in visited:
                    step = k
                    break
            if step is None:
                if len(chain) > 2 and start in adj[cur] and cur != start:
                    closed = True
                break
            chain.append(step)
            visited.add(step)
            prev, cur = cur, step
        poly = np.array([crossing(k) for k in chain])
        if closed:
            poly = np.vstack([poly, poly[:1]])
        touches = on_boundary(chain[0]) or on_boundary(chain[-1])
        comps.append(GridComponent(poly, closed and not touches, touches))
    return comps


def clip_to_window(points: np.ndarray, window: float) -> list[np.ndarray]:
    """Pieces of a polyline inside [-window, window]^2, each ending exactly
    on the window boundary where the polyline crosses it."""
    pts = np.asarray(points, float)
    inside = np.all(np.abs(pts) <= window, axis=1)
    pieces, cur = [], []

    def crossing(a, b):
        # largest t in [0, 1] keeping a + t (b - a) inside, a inside
        t = 1.0
        for k in range(2):
            d = b[k] - a[k]
            if d > 0 and b[k] > window:
                t = min(t, (window - a[k]) / d)
            elif d < 0 and b[k] < -window:
                t = min(t, (-window - a[k]) / d)
        return a + t * (b - a)

    for i in range(len(pts)):
        if inside[i]:
            if not cur and i > 0:
                cur.append(crossing(pts[i], pts[i - 1]))
            cur.append(pts[i])
        elif cur:
            cur.append(crossing(pts[i - 1], pts[i]))
            pieces.append(np.array(cur))
            cur = []
    if cur:
        pieces.append(np.array(cur))
    return pieces


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))
