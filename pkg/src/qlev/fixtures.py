"""Named test functions, plane families and synthetic point sets used by the
experiments and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LinearForm, PlaneSpec, build_plane
from .qpfunction import Harmonic, TrigPolynomial


def separable(m: int = 4) -> TrigPolynomial:
    """cos 2 pi x1 + cos 2 pi x2, seen in m variables."""
    e = np.eye(m, dtype=int)
    return TrigPolynomial.from_terms(m, [(tuple(e[0]), 1.0), (tuple(e[1]), 1.0)])


def even_sum(m: int = 4) -> TrigPolynomial:
    """sum_i cos 2 pi x_i; even, with singular level 0 on rational planes."""
    e = np.eye(m, dtype=int)
    return TrigPolynomial.from_terms(m, [(tuple(e[i]), 1.0) for i in range(m)])


def desk_fixture() -> TrigPolynomial:
    """sum_i cos 2 pi x_i + 0.3 cos 2 pi (x1 + x2 - x3) on T^4."""
    terms = [((1, 0, 0, 0), 1.0), ((0, 1, 0, 0), 1.0), ((0, 0, 1, 0), 1.0), ((0, 0, 0, 1), 1.0),
             ((1, 1, -1, 0), 0.3)]
    return TrigPolynomial.from_terms(4, terms)


def control_fixture() -> TrigPolynomial:
    """Dominant cos 2 pi x1 plus small couplings: level curves near a plane
    transversal to x1 are open along the hyperplane x1 = const."""
    terms = [((1, 0, 0, 0), 2.0), ((0, 1, 0, 0), 0.3), ((0, 0, 1, 0), 0.3), ((0, 0, 0, 1), 0.3),
             ((1, 1, -1, 0), 0.2), ((0, 1, 0, 1), 0.15)]
    return TrigPolynomial.from_terms(4, terms)


@dataclass(frozen=True)
class PlaneFamily:
    """Planes l1 + s p1 = o1, l2 + t p2 = o2 around a rational pair (l1, l2)."""

    l1: LinearForm
    l2: LinearForm
    p1: LinearForm
    p2: LinearForm
    offsets: tuple[float, float]

    def plane(self, s: float = 0.0, t: float = 0.0, offsets=None) -> PlaneSpec:
        off = self.offsets if offsets is None else offsets
        return build_plane([self.l1.perturbed(self.p1, s), self.l2.perturbed(self.p2, t)], off)

    def shifted(self, dp1, dp2) -> "PlaneFamily":
        """Same family with both base forms moved by the given coefficient offsets."""
        l1 = LinearForm(tuple(np.add(self.l1.coefficients, dp1)))
        l2 = LinearForm(tuple(np.add(self.l2.coefficients, dp2)))
        return PlaneFamily(l1, l2, self.p1, self.p2, self.offsets)


def desk_family() -> PlaneFamily:
    """Rational pair l1 = x4, l2 = x1 - x2 with fixed generic generators."""
    return PlaneFamily(
        LinearForm.rational((0, 0, 0, 1)),
        LinearForm.rational((1, -1, 0, 0)),
        LinearForm((0.37, -0.61, 0.23, 0.0)),
        LinearForm((0.0, 0.29, 0.71, -0.43)),
        (0.1, 0.2),
    )


def random_trig(rng: np.random.Generator, m: int, n_terms: int = 4, max_k: int = 1) -> TrigPolynomial:
    """Random trig polynomial with integer frequencies in [-max_k, max_k]^m."""
    hs = []
    while len(hs) < n_terms:
        k = tuple(int(v) for v in rng.integers(-max_k, max_k + 1, m))
        if any(k):
            hs.append(Harmonic(k, float(rng.uniform(0.3, 1.0)), float(rng.uniform(0, 2 * np.pi))))
    return TrigPolynomial(m, tuple(hs))


def random_plane(rng: np.random.Generator, m: int) -> PlaneSpec:
    forms = [LinearForm(tuple(rng.normal(size=m))) for _ in range(m - 2)]
    return build_plane(forms, tuple(rng.uniform(-0.5, 0.5, m - 2)))


def spiral(s_max: float = 200.0, ds: float = 0.01) -> np.ndarray:
    """(s cos s, s sin s) / 10: a curve whose strip width grows without bound."""
    s = np.arange(0.0, s_max + ds / 2, ds)
    return np.column_stack([s * np.cos(s), s * np.sin(s)]) / 10.0
