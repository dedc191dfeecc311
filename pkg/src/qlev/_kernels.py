"""Compiled inner loops for level-curve continuation.

The restricted function is passed as four flat arrays (amp, w1, w2, psi):
g(y) = sum_h amp[h] * cos(w1[h] * y1 + w2[h] * y2 + psi[h]).
"""

import math

import numpy as np
from numba import njit

CLOSED = 0
BUDGET = 1
NEAR_CRITICAL = 2
LEFT_WINDOW = 3
STALLED = 4

CORRECTION_TOL = 1e-10
MAX_TURN = 0.2  # radians per accepted step
MAX_HALVINGS = 6
REGROW_AFTER = 5


@njit(cache=True)
def g_and_grad(amp, w1, w2, psi, y1, y2):
    g = 0.0
    d1 = 0.0
    d2 = 0.0
    for h in range(amp.shape[0]):
        th = w1[h] * y1 + w2[h] * y2 + psi[h]
        c = math.cos(th)
        s = math.sin(th)
        g += amp[h] * c
        d1 -= amp[h] * s * w1[h]
        d2 -= amp[h] * s * w2[h]
    return g, d1, d2


@njit(cache=True)
def correct(amp, w1, w2, psi, level, y1, y2):
    """Newton projection onto {g = level} along the gradient."""
    for _ in range(12):
        g, d1, d2 = g_and_grad(amp, w1, w2, psi, y1, y2)
        r = g - level
        n2 = d1 * d1 + d2 * d2
        if n2 == 0.0:
            return abs(r) < CORRECTION_TOL, y1, y2
        if abs(r) < CORRECTION_TOL:
            # one polishing step: quadratic convergence takes r to round-off
            return True, y1 - r * d1 / n2, y2 - r * d2 / n2
        y1 -= r * d1 / n2
        y2 -= r * d2 / n2
    g, d1, d2 = g_and_grad(amp, w1, w2, psi, y1, y2)
    return abs(g - level) < CORRECTION_TOL, y1, y2


@njit(cache=True)
def tangent(amp, w1, w2, psi, y1, y2, ref1, ref2):
    """Unit rot90(grad g) = (-g_2, g_1)/|grad g|, flipped to agree with (ref1, ref2)."""
    g, d1, d2 = g_and_grad(amp, w1, w2, psi, y1, y2)
    n = math.hypot(d1, d2)
    if n == 0.0:
        return 0.0, 0.0, 0.0
    t1 = -d2 / n
    t2 = d1 / n
    if t1 * ref1 + t2 * ref2 < 0.0:
        t1 = -t1
        t2 = -t2
    return t1, t2, n


@njit(cache=True)
def trace_kernel(amp, w1, w2, psi, level, seed1, seed2, orient, step, closure_tol,
                 s_min, s_max, grad_floor, window):
    """Continuation of {g = level} from a seed on it.

    ``orient`` is +1 for the counterclockwise flow rot90(grad g), -1 for the
    reverse. ``window`` <= 0 disables the LeftWindow stop.
    Returns (points, count, code, arc_length).
    """
    cap = int(s_max / step * 1.05) + 64
    pts = np.empty((cap, 2))
    pts[0, 0] = seed1
    pts[0, 1] = seed2
    n = 1
    g, d1, d2 = g_and_grad(amp, w1, w2, psi, seed1, seed2)
    gn = math.hypot(d1, d2)
    if gn <= grad_floor:
        return pts[:1], 1, NEAR_CRITICAL, 0.0
    t01 = -orient * d2 / gn
    t02 = orient * d1 / gn
    pt1 = t01
    pt2 = t02
    y1 = seed1
    y2 = seed2
    arc = 0.0
    h = step
    halvings = 0
    good = 0
    while arc < s_max:
        t1, t2, gn = tangent(amp, w1, w2, psi, y1, y2, pt1, pt2)
        if gn <= grad_floor:
            return pts[:n], n, NEAR_CRITICAL, arc

        if arc >= s_min:
            e1 = seed1 - y1
            e2 = seed2 - y2
            dist = math.hypot(e1, e2)
            along = e1 * t1 + e2 * t2
            if dist <= 1.5 * h and along > 0.0 and abs(e1 * t2 - e2 * t1) < 0.5 * h:
                # land on the seed: short tangent steps with correction
                z1 = y1
                z2 = y2
                a1 = t1
                a2 = t2
                ok = True
                for _ in range(8):
                    f1 = seed1 - z1
                    f2 = seed2 - z2
                    if math.hypot(f1, f2) < 0.01 * closure_tol:
                        break
                    s = f1 * a1 + f2 * a2
                    ok, z1, z2 = correct(amp, w1, w2, psi, level, z1 + s * a1, z2 + s * a2)
                    if not ok:
                        break
                    a1, a2, _g = tangent(amp, w1, w2, psi, z1, z2, a1, a2)
                err = math.hypot(seed1 - z1, seed2 - z2)
                if ok and err < closure_tol and a1 * t01 + a2 * t02 > 0.0:
                    if n >= cap:
                        new = np.empty((2 * cap, 2))
                        new[:n] = pts[:n]
                        pts = new
                        cap = 2 * cap
                    arc += math.hypot(z1 - y1, z2 - y2)
                    pts[n, 0] = z1
                    pts[n, 1] = z2
                    n += 1
                    return pts[:n], n, CLOSED, arc

        m1 = y1 + 0.5 * h * t1
        m2 = y2 + 0.5 * h * t2
        u1, u2, gm = tangent(amp, w1, w2, psi, m1, m2, t1, t2)
        ok = gm > 0.0
        if ok:
            p1 = y1 + h * u1
            p2 = y2 + h * u2
            ok, q1, q2 = correct(amp, w1, w2, psi, level, p1, p2)
            if ok and math.hypot(q1 - p1, q2 - p2) > 0.5 * h:
                ok = False
            if ok:
                v1, v2, gq = tangent(amp, w1, w2, psi, q1, q2, t1, t2)
                c = v1 * t1 + v2 * t2
                if gq == 0.0 or c < math.cos(MAX_TURN):
                    ok = False
        if not ok:
            halvings += 1
            if halvings > MAX_HALVINGS:
                return pts[:n], n, STALLED, arc
            h *= 0.5
            good = 0
            continue

        if n >= cap:
            new = np.empty((2 * cap, 2))
            new[:n] = pts[:n]
            pts = new
            cap = 2 * cap
        arc += math.hypot(q1 - y1, q2 - y2)
        y1 = q1
        y2 = q2
        pt1 = t1
        pt2 = t2
        pts[n, 0] = y1
        pts[n, 1] = y2
        n += 1
        good += 1
        if h < step and good >= REGROW_AFTER:
            h = min(2.0 * h, step)
            halvings = max(halvings - 1, 0)
            good = 0
        elif h >= step:
            halvings = 0
        if window > 0.0 and (abs(y1) > window or abs(y2) > window):
            return pts[:n], n, LEFT_WINDOW, arc
    return pts[:n], n, BUDGET, arc


@njit(cache=True)
def bisect_edges(amp, w1, w2, psi, level, a, b, tol):
    """Bisection of g - level on the segments a[i] -> b[i] (sign change assumed)."""
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        x1 = a[i, 0]
        x2 = a[i, 1]
        z1 = b[i, 0]
        z2 = b[i, 1]
        ga = g_and_grad(amp, w1, w2, psi, x1, x2)[0] - level
        for _ in range(80):
            c1 = 0.5 * (x1 + z1)
            c2 = 0.5 * (x2 + z2)
            gc = g_and_grad(amp, w1, w2, psi, c1, c2)[0] - level
            if abs(gc) < tol:
                x1 = c1
                x2 = c2
                break
            if (gc > 0.0) == (ga > 0.0):
                x1 = c1
                x2 = c2
                ga = gc
            else:
                z1 = c1
                z2 = c2
        out[i, 0] = x1
        out[i, 1] = x2
    return out
