import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlev.fixtures import random_plane, random_trig, separable
from qlev.lattice import LinearForm, build_plane
from qlev.qpfunction import find_critical_points, restrict
from qlev.tracer import (
    EmptyLevelError,
    SeedOffLevelError,
    Termination,
    TraceParams,
    clip_to_window,
    find_seeds,
    hausdorff,
    level_components,
    marching_squares,
    trace,
    trace_robust,
)


@pytest.fixture(scope="module")
def sep():
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0, 0))
    return restrict(separable(), p)


def level_errors(g, tr):
    return np.abs(g.evaluate(tr.points) - tr.level)


def seed_on(g, c, y2, lo, hi):
    """Bisect g(., y2) = c for y1 in [lo, hi]."""
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if (g.evaluate(np.array([a, y2])) - c) * (g.evaluate(np.array([mid, y2])) - c) <= 0:
            b = mid
        else:
            a = mid
    return np.array([0.5 * (a + b), y2])


def test_small_oval_closes(sep):
    seed = seed_on(sep, 1.9, 0.0, 0.0, 0.25)
    tr = trace(sep, 1.9, seed)
    assert tr.termination is Termination.CLOSED
    assert tr.closure_error < 1e-5
    assert level_errors(sep, tr).max() < 1e-10
    # near-circular: radius r with 2 - (2 pi r)^2 / 2 * 2 ... compare with the polygon perimeter instead
    r = np.hypot(*tr.points.T)
    assert r.max() / r.min() < 1.01
    assert tr.arc_length == pytest.approx(2 * math.pi * r.mean(), rel=1e-3)


def test_separatrix_line_is_open_and_straight(sep):
    seed = np.array([0.3, 0.2])  # on y1 + y2 = 1/2
    assert abs(sep.evaluate(seed)) < 1e-15
    tr = trace(sep, 0.0, seed, TraceParams(s_max=50.0))
    assert tr.termination is Termination.BUDGET
    assert np.abs(tr.points.sum(axis=1) - 0.5).max() < 1e-9
    assert level_errors(sep, tr).max() < 1e-10


def test_seed_off_level(sep):
    with pytest.raises(SeedOffLevelError):
        trace(sep, 1.0, np.array([0.0, 0.0]))


def test_near_critical_abort(sep):
    # g = 0 at a saddle point (0.5, 0): zero gradient at the seed
    tr = trace(sep, 0.0, np.array([0.5, 0.0]))
    assert tr.termination is Termination.NEAR_CRITICAL


def test_trajectory_invariants(rng):
    f = random_trig(rng, 4, 5, 1)
    p = random_plane(rng, 4)
    g = restrict(f, p)
    c = float(np.median(g.grid(1.0, 0.05)[1]))
    params = TraceParams(s_max=200.0)
    for s in find_seeds(g, c, 1.0, 0.05, params):
        tr = trace_robust(g, c, s, params)
        assert level_errors(g, tr).max() < 1e-8
        steps = np.hypot(*np.diff(tr.points, axis=0).T)
        assert steps.max() < 2 * params.step
        if tr.termination is Termination.CLOSED:
            assert tr.closure_error < params.closure_tol
        # lift consistency
        dx = tr.lifted_points - tr.lifted_points[0]
        np.testing.assert_allclose(dx, (tr.points - tr.points[0]) @ p.basis, atol=1e-10)


def test_reversibility(rng):
    f = random_trig(rng, 3, 4, 1)
    g = restrict(f, random_plane(rng, 3))
    c = float(np.median(g.grid(1.0, 0.05)[1]))
    s = find_seeds(g, c, 1.0, 0.05)[0]
    a = trace(g, c, s, TraceParams(s_max=30.0))
    b = trace(g, c, s, TraceParams(s_max=30.0), orient=-1)
    if a.termination is Termination.CLOSED:
        assert b.termination is Termination.CLOSED
        assert hausdorff(a.points, b.points) < 0.01
    else:
        # the two directions run along the same curve on opposite sides of the seed
        assert hausdorff(a.points[:5], b.points[:5]) < 0.05


def test_closed_stays_closed_with_doubled_budget(sep):
    seed = seed_on(sep, 1.0, 0.0, 0.0, 0.5)
    a = trace(sep, 1.0, seed, TraceParams(s_max=100.0))
    b = trace(sep, 1.0, seed, TraceParams(s_max=200.0))
    assert a.termination is b.termination is Termination.CLOSED
    assert a.arc_length == pytest.approx(b.arc_length, rel=1e-12)


def test_find_seeds_separable(sep):
    seeds = find_seeds(sep, 1.0, 1.0, 0.05)
    # ovals around the maxima at integer points inside [-1, 1]^2: 3 x 3 lattice
    assert len(seeds) == 9
    for s in seeds:
        assert abs(sep.evaluate(s) - 1.0) < 1e-10
    with pytest.raises(EmptyLevelError):
        find_seeds(sep, 3.0, 1.0, 0.05)


def test_marching_squares_separable(sep):
    # ovals of radius 1/4 around the nine maxima with |y|_inf <= 1
    comps = marching_squares(sep, 1.0, 1.3, 0.01)
    assert comps and all(c.closed and not c.touches_boundary for c in comps)
    assert len(comps) == 9
    # the singular level is the net of lines y1 +- y2 in 1/2 + Z
    lines = marching_squares(sep, 0.0, 1.2, 0.01)
    assert any(c.touches_boundary for c in lines)
    for comp in lines:
        y = comp.polyline
        frac = lambda v: np.abs((v - 0.5) - np.round(v - 0.5))
        assert np.minimum(frac(y[:, 0] + y[:, 1]), frac(y[:, 0] - y[:, 1])).max() < 1e-9


def test_marching_squares_polyline_on_level(sep):
    for comp in marching_squares(sep, 0.7, 1.0, 0.01):
        # linear interpolation error is O(h^2 |g''|)
        assert np.abs(sep.evaluate(comp.polyline) - 0.7).max() < 5e-3
        if comp.closed:
            np.testing.assert_array_equal(comp.polyline[0], comp.polyline[-1])


def test_tracer_matches_marching_squares(rng):
    f = random_trig(rng, 4, 4, 1)
    g = restrict(f, random_plane(rng, 4))
    L, h = 1.0, 0.005
    crit = find_critical_points(g, L + 0.1).values
    c = 0.1
    while min((abs(c - v) for v in crit), default=1) < 0.05:
        c += 0.07
    _, comps = level_components(g, c, L, 0.01)
    ms = marching_squares(g, c, L, h)
    assert len(comps) == len(ms)
    assert sorted(x.closed for x in comps) == sorted(x.closed for x in ms)
    for comp in comps:
        pts = np.vstack(clip_to_window(comp.points, L))
        assert min(hausdorff(pts, q.polyline) for q in ms) < 2 * h


def test_clip_to_window_hits_boundary():
    pts = np.column_stack([np.linspace(-2, 2, 41), np.zeros(41)])
    (piece,) = clip_to_window(pts, 1.0)
    assert piece[0, 0] == -1.0 and piece[-1, 0] == 1.0


@given(st.floats(-1.5, 1.5), st.floats(0.05, 0.45))
def test_level_fidelity_property(c, y2):
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0, 0))
    g = restrict(separable(), p)
    lo, hi = 0.0, 0.5
    if (g.evaluate(np.array([lo, y2])) - c) * (g.evaluate(np.array([hi, y2])) - c) > 0:
        return
    seed = seed_on(g, c, y2, lo, hi)
    if np.hypot(*g.gradient(seed)) < 1e-3:
        return
    tr = trace_robust(g, c, seed, TraceParams(s_max=20.0))
    assert level_errors(g, tr).max() < 1e-8
