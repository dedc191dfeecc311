"""Integer-lattice utilities: primitive vectors, linear forms, plane
parametrizations and brute-force rationalization of measured directions."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

FORM_RANK_FLOOR = 1e-10


class LatticeError(ValueError):
    pass


class ZeroVectorError(LatticeError):
    pass


class DegeneratePlaneError(LatticeError):
    pass


class DimensionMismatchError(LatticeError):
    pass


def primitive_normalize(v) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries and flip it so the
    first nonzero entry is positive."""
    entries = [int(e) for e in v]
    if any(float(o) != e for e, o in zip(entries, v)):
        raise LatticeError(f"non-integer entries in {tuple(v)}")
    g = 0
    for e in entries:
        g = math.gcd(g, abs(e))
    if g == 0:
        raise ZeroVectorError("cannot normalize the zero vector")
    out = [e // g for e in entries]
    first = next(e for e in out if e != 0)
    if first < 0:
        out = [-e for e in out]
    return tuple(out)


@dataclass(frozen=True)
class LinearForm:
    coefficients: tuple[float, ...]
    witness: tuple[int, ...] | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise LatticeError("form coefficients must be finite")
        if all(c == 0.0 for c in coeffs):
            raise ZeroVectorError("linear form has all-zero coefficients")
        if self.witness is not None:
            w = tuple(int(e) for e in self.witness)
            if len(w) != len(coeffs):
                raise DimensionMismatchError("witness length differs from form length")
            wa = np.asarray(w, float)
            ca = np.asarray(coeffs)
            scale = float(ca @ wa) / float(wa @ wa)
            if np.max(np.abs(ca - scale * wa)) >= 1e-12 * np.max(np.abs(ca)):
                raise LatticeError(f"coefficients {coeffs} are not proportional to {w}")
            object.__setattr__(self, "witness", w)

    @classmethod
    def rational(cls, entries) -> "LinearForm":
        ints = tuple(int(e) for e in entries)
        return cls(tuple(float(e) for e in ints), witness=ints)

    @property
    def m(self) -> int:
        return len(self.coefficients)

    @property
    def is_rational(self) -> bool:
        return self.witness is not None

    def perturbed(self, generator: "LinearForm", amount: float) -> "LinearForm":
        """l + amount * p; the rationality witness survives only if amount == 0."""
        if generator.m != self.m:
            raise DimensionMismatchError("generator dimension differs")
        if amount == 0.0:
            return self
        c = np.asarray(self.coefficients) + amount * np.asarray(generator.coefficients)
        return LinearForm(tuple(c))

    def __call__(self, x) -> float:
        return float(np.dot(self.coefficients, x))


def _kernel_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal kernel basis of the (n x m) matrix ``a``.

    Row reduction with partial pivoting fixes the free columns, the kernel
    vectors are read off in free-column order and orthonormalized by
    Gram-Schmidt in that same order. Fully deterministic.
    """
    r = a.astype(float).copy()
    n, m = r.shape
    pivots: list[int] = []
    row = 0
    for col in range(m):
        if row == n:
            break
        p = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[p, col]) <= 1e-14 * max(1.0, np.abs(r).max()):
            continue
        if p != row:
            r[[row, p]] = r[[p, row]]
        r[row] /= r[row, col]
        for i in range(n):
            if i != row and r[i, col] != 0.0:
                r[i] -= r[i, col] * r[row]
        pivots.append(col)
        row += 1
    free = [c for c in range(m) if c not in pivots]
    raw = []
    for fcol in free:
        v = np.zeros(m)
        v[fcol] = 1.0
        for i, pcol in enumerate(pivots):
            v[pcol] = -r[i, fcol]
        raw.append(v)
    # small pivots make raw vectors nearly parallel; the cancellation in
    # Gram-Schmidt then leaks row-space components, projected back out here
    pinv = np.linalg.pinv(a.astype(float))
    basis: list[np.ndarray] = []
    for v in raw:
        w = v / np.linalg.norm(v)
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
            w /= np.linalg.norm(w)
            w -= pinv @ (a @ w)
        for b in basis:
            w -= (b @ w) * b
        w /= np.linalg.norm(w)
        basis.append(w)
    return np.array(basis)


@dataclass(frozen=True)
class PlaneSpec:
    """Affine 2-plane {x : l_i(x) = b_i} with an orthonormal parametrization
    x(y) = base_point + y1 * u1 + y2 * u2."""

    forms: tuple[LinearForm, ...]
    offsets: tuple[float, ...]
    base_point: np.ndarray = field(repr=False)
    u1: np.ndarray = field(repr=False)
    u2: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.base_point)

    @property
    def basis(self) -> np.ndarray:
        return np.vstack([self.u1, self.u2])

    @property
    def form_matrix(self) -> np.ndarray:
        return np.array([f.coefficients for f in self.forms])

    def lift(self, y) -> np.ndarray:
        """Map plane coordinates (shape (2,) or (N, 2)) to R^m."""
        y = np.asarray(y, float)
        return self.base_point + y @ self.basis

    def project(self, x) -> np.ndarray:
        """Plane coordinates of the orthogonal projection of x onto the plane."""
        return (np.asarray(x, float) - self.base_point) @ self.basis.T

    def direction(self, d2) -> np.ndarray:
        d2 = np.asarray(d2, float)
        return d2[0] * self.u1 + d2[1] * self.u2

    def rotated(self, angle: float) -> "PlaneSpec":
        """Same affine plane, basis rotated by ``angle`` inside the plane."""
        c, s = math.cos(angle), math.sin(angle)
        u1 = c * self.u1 + s * self.u2
        u2 = -s * self.u1 + c * self.u2
        return PlaneSpec(self.forms, self.offsets, self.base_point.copy(), u1, u2)

    def through(self, x) -> "PlaneSpec":
        """Plane with the same forms whose offsets put x on it."""
        x = np.asarray(x, float)
        return build_plane(self.forms, tuple(f(x) for f in self.forms))

    def check_invariants(self) -> None:
        a = self.form_matrix
        if np.linalg.svd(a, compute_uv=False).min() <= FORM_RANK_FLOOR:
            raise DegeneratePlaneError("forms are linearly dependent")
        g = self.basis @ self.basis.T
        if np.max(np.abs(g - np.eye(2))) > 1e-12:
            raise LatticeError("plane basis is not orthonormal")
        if np.max(np.abs(a @ self.basis.T)) > 1e-12 * max(1.0, np.abs(a).max()):
            raise LatticeError("forms do not annihilate the plane basis")
        if np.max(np.abs(a @ self.base_point - np.asarray(self.offsets))) > 1e-12 * max(
            1.0, np.abs(self.offsets).max() if self.offsets else 1.0
        ):
            raise LatticeError("base point does not satisfy the offsets")


def build_plane(forms, offsets) -> PlaneSpec:
    forms = tuple(f if isinstance(f, LinearForm) else LinearForm(tuple(f)) for f in forms)
    if not forms:
        raise DimensionMismatchError("at least one form is required")
    m = forms[0].m
    if any(f.m != m for f in forms):
        raise DimensionMismatchError("forms have different dimensions")
    if len(forms) != m - 2:
        raise DimensionMismatchError(f"need m - 2 = {m - 2} forms for m = {m}, got {len(forms)}")
    offsets = tuple(float(b) for b in offsets)
    if len(offsets) != len(forms):
        raise DimensionMismatchError("one offset per form is required")
    a = np.array([f.coefficients for f in forms])
    if np.linalg.svd(a, compute_uv=False).min() <= FORM_RANK_FLOOR:
        raise DegeneratePlaneError("forms are linearly dependent")
    b = np.asarray(offsets)
    base_point = a.T @ np.linalg.solve(a @ a.T, b)
    basis = _kernel_basis(a)
    plane = PlaneSpec(forms, offsets, base_point, basis[0], basis[1])
    plane.check_invariants()
    return plane


@dataclass(frozen=True)
class Candidate:
    normal: tuple[int, ...]
    residual: float

    @property
    def norm(self) -> float:
        return math.sqrt(sum(e * e for e in self.normal))


@functools.lru_cache(maxsize=8)
def primitive_box(m: int, max_norm: int) -> np.ndarray:
    """All primitive integer vectors with |n|_inf <= max_norm and first
    nonzero entry positive, as an (K, m) int array in lexicographic order."""
    rng = np.arange(-max_norm, max_norm + 1)
    grid = np.array(list(itertools.product(rng, repeat=m)), dtype=np.int64)
    nz = grid != 0
    has = nz.any(axis=1)
    grid = grid[has]
    nz = nz[has]
    first = grid[np.arange(len(grid)), nz.argmax(axis=1)]
    grid = grid[first > 0]
    g = np.gcd.reduce(np.abs(grid), axis=1)
    out = grid[g == 1]
    out.setflags(write=False)
    return out


def rationalize_common_normal(dirs, max_norm: int = 10, tol: float = 1e-6) -> list[Candidate]:
    """Every primitive integer n in the box |n|_inf <= max_norm with
    max_i |<n, dir_i>| / |n| < tol, sorted by residual then by |n|.

    An empty list means no candidate: the directions are either irrational
    or need a larger box.
    """
    d = np.atleast_2d(np.asarray(dirs, float))
    if d.size == 0:
        raise LatticeError("at least one direction is required")
    if max_norm < 1:
        raise LatticeError("max_norm must be >= 1")
    norms = np.linalg.norm(d, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise LatticeError("directions must be unit vectors")
    box = primitive_box(d.shape[1], int(max_norm))
    nb = box.astype(float)
    lengths = np.linalg.norm(nb, axis=1)
    resid = np.max(np.abs(nb @ d.T), axis=1) / lengths
    keep = np.nonzero(resid < tol)[0]
    order = sorted(keep, key=lambda i: (resid[i], lengths[i]))
    return [Candidate(tuple(int(e) for e in box[i]), float(resid[i])) for i in order]


def in_plane_component(normal, plane: PlaneSpec) -> np.ndarray:
    """(<n, u1>, <n, u2>) / |n|; zero iff the plane lies in the hyperplane n^perp."""
    n = np.asarray(normal, float)
    return np.array([n @ plane.u1, n @ plane.u2]) / np.linalg.norm(n)
