import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlev.lattice import (
    DegeneratePlaneError,
    DimensionMismatchError,
    LatticeError,
    LinearForm,
    ZeroVectorError,
    build_plane,
    in_plane_component,
    primitive_box,
    primitive_normalize,
    rationalize_common_normal,
)

int_vectors = st.lists(st.integers(-20, 20), min_size=3, max_size=4).filter(any)


@pytest.mark.parametrize(
    "v, expected",
    [((2, -4, 6, 0), (1, -2, 3, 0)), ((0, 0, 1, 0), (0, 0, 1, 0)), ((-3, 0, 0, -9), (1, 0, 0, 3))],
)
def test_primitive_normalize_examples(v, expected):
    assert primitive_normalize(v) == expected


def test_primitive_normalize_rejects_zero_and_fractions():
    with pytest.raises(ZeroVectorError):
        primitive_normalize((0, 0, 0))
    with pytest.raises(LatticeError):
        primitive_normalize((0.5, 1, 0))


def test_primitive_normalize_idempotent_exhaustive_m3():
    for v in itertools.product(range(-20, 21), repeat=3):
        if not any(v):
            continue
        p = primitive_normalize(v)
        assert primitive_normalize(p) == p
        assert math.gcd(*map(abs, p)) == 1
        assert next(e for e in p if e) > 0
        # parallel to the input
        assert np.linalg.matrix_rank(np.array([v, p])) == 1


@given(int_vectors)
def test_primitive_normalize_sign_canonical(v):
    p = primitive_normalize(v)
    assert primitive_normalize([-e for e in v]) == p
    assert primitive_normalize([3 * e for e in v]) == p


def test_linear_form_witness():
    f = LinearForm.rational((1, -1, 0, 0))
    assert f.is_rational and f.witness == (1, -1, 0, 0)
    assert LinearForm((2.0, -2.0, 0.0, 0.0), witness=(1, -1, 0, 0)).is_rational
    with pytest.raises(LatticeError):
        LinearForm((1.0, -1.1, 0.0, 0.0), witness=(1, -1, 0, 0))
    with pytest.raises(ZeroVectorError):
        LinearForm((0.0, 0.0, 0.0))
    g = f.perturbed(LinearForm((0.0, 0.0, 1.0, 0.0)), 1e-3)
    assert not g.is_rational
    assert f.perturbed(LinearForm((0.0, 0.0, 1.0, 0.0)), 0.0) is f


def test_build_plane_coordinate_plane():
    p = build_plane([LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((0, 0, 0, 1))], (0, 0))
    np.testing.assert_array_equal(p.u1, [1, 0, 0, 0])
    np.testing.assert_array_equal(p.u2, [0, 1, 0, 0])
    np.testing.assert_array_equal(p.base_point, [0, 0, 0, 0])


def test_build_plane_m3():
    p = build_plane([LinearForm.rational((0, 0, 1))], (0.25,))
    np.testing.assert_allclose(p.base_point, [0, 0, 0.25], atol=1e-15)
    assert abs(p.u1[2]) < 1e-15 and abs(p.u2[2]) < 1e-15


def test_build_plane_invariants_by_substitution():
    forms = [LinearForm.rational((0, 0, 1, 0)), LinearForm.rational((2, 0, 0, 2))]
    p = build_plane(forms, (0.0, 0.0))
    a = p.form_matrix
    assert np.max(np.abs(p.basis @ p.basis.T - np.eye(2))) < 1e-12
    assert np.max(np.abs(a @ p.basis.T)) < 1e-12


def test_build_plane_errors():
    with pytest.raises(DegeneratePlaneError):
        build_plane([LinearForm((1.0, 0, 0, 0)), LinearForm((2.0, 0, 0, 0))], (0, 0))
    with pytest.raises(DimensionMismatchError):
        build_plane([LinearForm((1.0, 0, 0, 0))], (0,))
    with pytest.raises(DimensionMismatchError):
        build_plane([LinearForm((1.0, 0, 0)), LinearForm((0, 1.0, 0, 0))], (0, 0))


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.floats(-2, 2), st.floats(-2, 2))
def test_build_plane_invariants_random(c, b1, b2):
    a = np.array(c).reshape(2, 4)
    if np.linalg.svd(a, compute_uv=False).min() <= 1e-3:
        return
    p = build_plane([LinearForm(tuple(a[0])), LinearForm(tuple(a[1]))], (b1, b2))
    p.check_invariants()
    # minimum-norm base point is orthogonal to the plane directions
    assert np.max(np.abs(p.basis @ p.base_point)) < 1e-10
    # determinism: bit-identical basis on rebuild
    q = build_plane(p.forms, p.offsets)
    assert np.array_equal(p.basis, q.basis) and np.array_equal(p.base_point, q.base_point)


def test_plane_lift_project_roundtrip(rng):
    p = build_plane([LinearForm((0.3, -1.0, 0.2, 0.5)), LinearForm((0.1, 0.2, 1.0, -0.4))], (0.1, -0.3))
    y = rng.normal(size=(20, 2))
    np.testing.assert_allclose(p.project(p.lift(y)), y, atol=1e-12)
    q = p.through(p.lift(y[0]) + 0.1)
    np.testing.assert_allclose(q.form_matrix @ (p.lift(y[0]) + 0.1), q.offsets, atol=1e-12)
    r = p.rotated(0.7)
    r.check_invariants()
    np.testing.assert_allclose(r.base_point, p.base_point)


def test_primitive_box_size_and_convention():
    box = primitive_box(3, 2)
    # brute-force oracle
    expect = {primitive_normalize(v) for v in itertools.product(range(-2, 3), repeat=3) if any(v)}
    assert {tuple(int(e) for e in v) for v in box} == expect
    assert len(box) == len(expect)


def test_rationalize_single_direction_is_underdetermined():
    d = np.array([1, 1, 0, 0]) / math.sqrt(2)
    normals = {c.normal for c in rationalize_common_normal([d], max_norm=3, tol=1e-6)}
    assert {(1, -1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)} <= normals


def test_rationalize_three_samples_unique(rng):
    n = np.array([1.0, -1.0, 0.0, 0.0])
    dirs = []
    for _ in range(3):
        v = rng.normal(size=4)
        v -= (v @ n) / (n @ n) * n
        v += 1e-8 * rng.normal(size=4)
        dirs.append(v / np.linalg.norm(v))
    cands = rationalize_common_normal(dirs, max_norm=10, tol=1e-6)
    assert [c.normal for c in cands] == [(1, -1, 0, 0)]


def test_rationalize_irrational_no_candidate():
    d = np.array([1.0, math.pi / 10, 0.0, 0.0])
    d /= np.linalg.norm(d)
    # (0,0,a,b) are orthogonal to any such direction; the claim concerns the
    # (x1, x2) block, so restrict to m = 2 by embedding in a dense family
    cands = rationalize_common_normal([d, [0, 0, 1.0, 0], [0, 0, 0, 1.0]], max_norm=5, tol=1e-6)
    assert cands == []
    # exhaustive oracle
    box = primitive_box(4, 5).astype(float)
    ok = (np.abs(box @ d) / np.linalg.norm(box, axis=1) < 1e-6) & (box[:, 2] == 0) & (box[:, 3] == 0)
    assert not ok.any()


def test_rationalize_sorted_and_monotone_in_tol(rng):
    dirs = rng.normal(size=(2, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    loose = rationalize_common_normal(dirs, 6, 0.05)
    tight = rationalize_common_normal(dirs, 6, 0.01)
    assert {c.normal for c in tight} <= {c.normal for c in loose}
    keys = [(c.residual, c.norm) for c in loose]
    assert keys == sorted(keys)
    for c in loose:
        n = np.array(c.normal, float)
        assert np.max(np.abs(dirs @ n)) / np.linalg.norm(n) < 0.05


def test_rationalize_rejects_bad_input():
    with pytest.raises(LatticeError):
        rationalize_common_normal([[1.0, 1.0, 0, 0]])
    with pytest.raises(LatticeError):
        rationalize_common_normal([[1.0, 0, 0, 0]], max_norm=0)


def test_in_plane_component_zero_iff_plane_inside_hyperplane():
    p = build_plane([LinearForm.rational((0, 0, 0, 1)), LinearForm.rational((1, -1, 0, 0))], (0.1, 0.2))
    assert np.linalg.norm(in_plane_component((1, -1, 0, 0), p)) < 1e-12
    assert np.linalg.norm(in_plane_component((0, 0, 1, 0), p)) > 0.5
