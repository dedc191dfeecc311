import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlev.fixtures import even_sum, random_plane, random_trig, separable
from qlev.lattice import LinearForm, build_plane
from qlev.qpfunction import (
    Harmonic,
    TrigPolynomial,
    evaluate,
    find_critical_points,
    gradient,
    hessian,
    is_generic,
    restrict,
)

H = 1e-5


def central_diff(fun, x, h=H):
    x = np.asarray(x, float)
    out = np.empty_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return out


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0)


def test_evaluate_examples():
    assert evaluate(separable(), np.zeros(4)) == pytest.approx(2.0, abs=1e-15)
    assert evaluate(even_sum(), np.full(4, 0.5)) == pytest.approx(-4.0, abs=1e-12)


def test_canonicalization_merges_conjugate_frequencies():
    f = TrigPolynomial(3, (Harmonic((-1, 0, 0), 1.0, 0.3), Harmonic((1, 0, 0), 0.5, -0.3)))
    assert len(f.harmonics) == 1 and f.harmonics[0].k == (1, 0, 0)
    x = np.array([0.17, 0.4, -0.2])
    direct = math.cos(-2 * math.pi * 0.17 + 0.3) + 0.5 * math.cos(2 * math.pi * 0.17 - 0.3)
    assert evaluate(f, x) == pytest.approx(direct, abs=1e-12)


def test_periodicity(rng):
    f = random_trig(rng, 4, 6, 2)
    x = rng.uniform(-1, 1, (50, 4))
    for k in [(1, 0, 0, 0), (0, -3, 2, 1), (3, 3, -3, 0)]:
        np.testing.assert_allclose(evaluate(f, x + np.array(k)), evaluate(f, x), atol=1e-12)


def test_gradient_examples():
    f = TrigPolynomial.from_terms(4, [((1, 0, 0, 0), 1.0)])
    np.testing.assert_allclose(gradient(f, [0.25, 0, 0, 0]), [-2 * math.pi, 0, 0, 0], atol=1e-12)
    empty = TrigPolynomial(4, ())
    np.testing.assert_array_equal(gradient(empty, np.ones(4)), np.zeros(4))
    assert evaluate(empty, np.ones(4)) == 0.0


@pytest.mark.parametrize("m", [3, 4])
def test_gradient_and_hessian_vs_central_differences(rng, m):
    f = random_trig(rng, m, 6, 2)
    for x in rng.uniform(-1, 1, (100, m)):
        assert rel_err(gradient(f, x), central_diff(lambda z: evaluate(f, z), x)) < 1e-6
    for x in rng.uniform(-1, 1, (10, m)):
        fd = np.array([central_diff(lambda z: gradient(f, z)[i], x) for i in range(m)])
        assert rel_err(hessian(f, x), fd) < 1e-5


def test_restriction_identity_and_constant():
    f = separable()
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0, 0))
    g = restrict(f, p)
    y = np.array([0.13, -0.42])
    assert g.evaluate(y) == pytest.approx(math.cos(2 * math.pi * y[0]) + math.cos(2 * math.pi * y[1]), abs=1e-14)
    h = TrigPolynomial.from_terms(4, [((0, 0, 1, 0), 1.0)])
    p3 = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0.25, 0))
    assert restrict(h, p3).is_constant()
    assert abs(restrict(h, p3).evaluate(y)) < 1e-15


@pytest.mark.parametrize("m", [3, 4])
def test_restriction_chain_rule(rng, m):
    f = random_trig(rng, m, 5, 2)
    p = random_plane(rng, m)
    g = restrict(f, p)
    for y in rng.uniform(-2, 2, (100, 2)):
        x = p.lift(y)
        assert g.evaluate(y) == pytest.approx(evaluate(f, x), abs=1e-12)
        np.testing.assert_allclose(g.gradient(y), p.basis @ gradient(f, x), atol=1e-12)
        assert rel_err(g.gradient(y), central_diff(g.evaluate, y)) < 1e-6
        np.testing.assert_allclose(g.hessian(y), p.basis @ hessian(f, x) @ p.basis.T, atol=1e-10)


def test_vectorized_evaluation_matches_pointwise(rng):
    f = random_trig(rng, 4, 5, 2)
    p = random_plane(rng, 4)
    g = restrict(f, p)
    y = rng.uniform(-1, 1, (7, 2))
    np.testing.assert_allclose(g.evaluate(y), [g.evaluate(v) for v in y], atol=1e-14)
    np.testing.assert_allclose(g.gradient(y), np.array([g.gradient(v) for v in y]), atol=1e-14)


def test_critical_points_separable():
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0, 0))
    scan = find_critical_points(restrict(separable(), p), 0.6, 0.05)
    got = sorted((round(pt.value, 9), pt.morse_index, round(pt.y[0], 9), round(pt.y[1], 9)) for pt in scan.points)
    expected = sorted(
        [(2.0, 2, 0.0, 0.0)]
        + [(0.0, 1, a, b) for a, b in [(0.5, 0), (-0.5, 0), (0, 0.5), (0, -0.5)]]
        + [(-2.0, 0, a, b) for a in (0.5, -0.5) for b in (0.5, -0.5)]
    )
    assert [(v, i) for v, i, *_ in got] == [(v, i) for v, i, *_ in expected]
    for (_, _, a, b), (_, _, c, d) in zip(got, expected):
        assert abs(a - c) < 1e-9 and abs(b - d) < 1e-9
    assert not scan.non_morse and not scan.degenerate


def test_critical_points_constant_restriction():
    h = TrigPolynomial.from_terms(4, [((0, 0, 1, 0), 1.0)])
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0.25, 0))
    scan = find_critical_points(restrict(h, p), 0.5, 0.1)
    assert scan.degenerate and scan.points == [] and len(scan.non_morse) > 0
    assert not is_generic(scan)


def test_critical_points_self_validate(rng):
    f = random_trig(rng, 4, 5, 1)
    g = restrict(f, random_plane(rng, 4))
    scan = find_critical_points(g, 3.0)
    assert scan.points
    for pt in scan.points:
        y = np.array(pt.y)
        assert np.hypot(*g.gradient(y)) < 1e-9
        ev = np.linalg.eigvalsh(g.hessian(y))
        assert pt.morse_index == int(np.sum(ev < 0))
        assert abs(pt.hessian_det) > 1e-10
    vals = [pt.value for pt in scan.points]
    assert vals == sorted(vals)


def test_critical_values_invariant_under_basis_rotation(rng):
    f = random_trig(rng, 4, 5, 1)
    p = random_plane(rng, 4)
    a = find_critical_points(restrict(f, p), 1.0)
    b = find_critical_points(restrict(f, p.rotated(0.4)), 1.5)
    # the rotated window covers the original one; compare values inside it
    inside = [(pt.value, pt.morse_index) for pt in a.points]
    rotated = [(pt.value, pt.morse_index) for pt in b.points]
    for v, i in inside:
        assert any(abs(v - w) < 1e-8 and i == j for w, j in rotated)


def test_fixture_json_roundtrip():
    f = TrigPolynomial.from_terms(4, [((1, 1, -1, 0), 0.3), ((0, 0, 0, 1), 1.0)])
    assert TrigPolynomial.from_dict(f.to_dict()) == f
    with pytest.raises(KeyError, match="m"):
        TrigPolynomial.from_dict({"harmonics": []})
    with pytest.raises(ValueError):
        TrigPolynomial.from_dict({"m": 5, "harmonics": []})
    with pytest.raises(KeyError, match=r"harmonics\[0\].a"):
        TrigPolynomial.from_dict({"m": 3, "harmonics": [{"k": [1, 0, 0]}]})


@given(st.lists(st.integers(-2, 2), min_size=4, max_size=4).filter(any), st.floats(0.1, 2), st.floats(-3, 3))
def test_single_harmonic_gradient_formula(k, a, phi):
    f = TrigPolynomial.from_terms(4, [(tuple(k), a, phi)])
    x = np.array([0.1, -0.2, 0.33, 0.05])
    th = 2 * math.pi * np.dot(k, x) + phi
    np.testing.assert_allclose(gradient(f, x), -2 * math.pi * np.array(k) * a * math.sin(th), atol=1e-12)
