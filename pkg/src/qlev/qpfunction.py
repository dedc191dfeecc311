"""Periodic functions on T^m as finite cosine sums, and their restrictions to
affine 2-planes (quasiperiodic functions of two variables)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import DimensionMismatchError, PlaneSpec

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
CRIT_GRAD_CHECK = 1e-9
MORSE_DET_FLOOR = 1e-10
CONSTANT_GRAD_FLOOR = 1e-13


@dataclass(frozen=True)
class Harmonic:
    k: tuple[int, ...]
    a: float
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.a) or not math.isfinite(self.phi):
            raise ValueError("harmonic amplitude and phase must be finite")


def _canonical(k: tuple[int, ...], phi: float) -> tuple[tuple[int, ...], float]:
    first = next((e for e in k if e != 0), 0)
    if first < 0:
        return tuple(-e for e in k), -phi
    return k, phi


@dataclass(frozen=True)
class TrigPolynomial:
    """f(x) = sum_k a_k cos(2 pi <k, x> + phi_k), periodic under Z^m.

    Frequencies are stored with first nonzero entry positive (sign folded
    into the phase); repeated frequencies are merged.
    """

    m: int
    harmonics: tuple[Harmonic, ...]
    k: np.ndarray = field(init=False, repr=False, compare=False)
    a: np.ndarray = field(init=False, repr=False, compare=False)
    phi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        merged: dict[tuple[int, ...], complex] = {}
        for h in self.harmonics:
            if len(h.k) != self.m:
                raise DimensionMismatchError(f"frequency {h.k} is not {self.m}-dimensional")
            k, phi = _canonical(tuple(int(e) for e in h.k), float(h.phi))
            merged[k] = merged.get(k, 0j) + h.a * complex(math.cos(phi), math.sin(phi))
        hs = []
        for k, z in merged.items():
            if any(k):
                hs.append(Harmonic(k, abs(z), math.atan2(z.imag, z.real)) if z != 0 else None)
            else:
                # constant term: keep the real part as amplitude with zero phase
                hs.append(Harmonic(k, z.real, 0.0))
        hs = tuple(h for h in hs if h is not None)
        object.__setattr__(self, "harmonics", hs)
        object.__setattr__(self, "k", np.array([h.k for h in hs], float).reshape(len(hs), self.m))
        object.__setattr__(self, "a", np.array([h.a for h in hs], float))
        object.__setattr__(self, "phi", np.array([h.phi for h in hs], float))

    @classmethod
    def from_terms(cls, m: int, terms) -> "TrigPolynomial":
        """Build from (k, a) or (k, a, phi) tuples."""
        return cls(m, tuple(Harmonic(tuple(t[0]), float(t[1]), float(t[2]) if len(t) > 2 else 0.0) for t in terms))

    @property
    def max_freq_norm(self) -> float:
        if not len(self.k):
            return 0.0
        return float(np.linalg.norm(self.k, axis=1).max())

    def scaled_amplitudes(self, factors) -> "TrigPolynomial":
        factors = np.asarray(factors, float)
        return TrigPolynomial(
            self.m, tuple(Harmonic(h.k, h.a * f, h.phi) for h, f in zip(self.harmonics, factors))
        )

    def _phase(self, x):
        x = np.asarray(x, float)
        return TWO_PI * (x @ self.k.T) + self.phi

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "harmonics": [{"k": list(h.k), "a": h.a, "phi": h.phi} for h in self.harmonics],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrigPolynomial":
        if "m" not in d:
            raise KeyError("m")
        m = int(d["m"])
        if m not in (3, 4):
            raise ValueError(f"m must be 3 or 4, got {m}")
        hs = []
        for i, h in enumerate(d.get("harmonics", [])):
            for key in ("k", "a"):
                if key not in h:
                    raise KeyError(f"harmonics[{i}].{key}")
            hs.append(Harmonic(tuple(int(e) for e in h["k"]), float(h["a"]), float(h.get("phi", 0.0))))
        return cls(m, tuple(hs))


def evaluate(f: TrigPolynomial, x):
    """f at a point (shape (m,)) or at each row of an (N, m) array."""
    if not len(f.a):
        return 0.0 if np.ndim(x) == 1 else np.zeros(len(x))
    return np.cos(f._phase(x)) @ f.a


def gradient(f: TrigPolynomial, x) -> np.ndarray:
    x = np.asarray(x, float)
    if not len(f.a):
        return np.zeros_like(x)
    s = np.sin(f._phase(x)) * f.a
    return -TWO_PI * (s @ f.k)


def hessian(f: TrigPolynomial, x) -> np.ndarray:
    x = np.asarray(x, float)
    if not len(f.a):
        return np.zeros((f.m, f.m))
    c = np.cos(f._phase(x)) * f.a
    return -(TWO_PI**2) * (f.k.T * c) @ f.k


class RestrictedFunction:
    """g(y) = f(x0 + y1 u1 + y2 u2).

    Each harmonic becomes a_k cos(w1 y1 + w2 y2 + psi_k) with
    w = 2 pi (<k,u1>, <k,u2>) and psi_k = 2 pi <k, x0> + phi_k, so
    evaluation never forms the lifted point.
    """

    def __init__(self, f: TrigPolynomial, plane: PlaneSpec):
        if f.m != plane.m:
            raise DimensionMismatchError(f"function is {f.m}-periodic but plane lives in R^{plane.m}")
        self.f = f
        self.plane = plane
        self.amp = f.a.copy()
        self.w = TWO_PI * (f.k @ plane.basis.T)  # (H, 2)
        self.psi = TWO_PI * (f.k @ plane.base_point) + f.phi

    @property
    def w1(self) -> np.ndarray:
        return np.ascontiguousarray(self.w[:, 0])

    @property
    def w2(self) -> np.ndarray:
        return np.ascontiguousarray(self.w[:, 1])

    @property
    def gradient_scale(self) -> float:
        """Upper bound sum_k |a_k| |w_k| on |grad g|."""
        return float(np.abs(self.amp) @ np.linalg.norm(self.w, axis=1)) if len(self.amp) else 0.0

    def _theta(self, y):
        y = np.asarray(y, float)
        return y @ self.w.T + self.psi

    def __call__(self, y):
        return self.evaluate(y)

    def evaluate(self, y):
        if not len(self.amp):
            return 0.0 if np.ndim(y) == 1 else np.zeros(np.shape(y)[:-1])
        return np.cos(self._theta(y)) @ self.amp

    def gradient(self, y) -> np.ndarray:
        if not len(self.amp):
            return np.zeros(np.shape(y))
        return -(np.sin(self._theta(y)) * self.amp) @ self.w

    def hessian(self, y) -> np.ndarray:
        if not len(self.amp):
            return np.zeros(np.shape(y)[:-1] + (2, 2))
        c = np.cos(self._theta(y)) * self.amp
        return -np.einsum("...h,hi,hj->...ij", c, self.w, self.w)

    def grid(self, window: float, step: float):
        """Axis ticks and values of g on the square grid [-window, window]^2.

        Returns (ticks, values) with values[i, j] = g(ticks[i], ticks[j]).
        """
        n = int(round(2 * window / step))
        ticks = np.linspace(-window, window, n + 1)
        if not len(self.amp):
            return ticks, np.zeros((n + 1, n + 1))
        # separable phases keep this O(H N^2) without building the (N^2, 2) array
        p1 = np.outer(ticks, self.w[:, 0])
        p2 = np.outer(ticks, self.w[:, 1]) + self.psi
        values = np.zeros((n + 1, n + 1))
        for h in range(len(self.amp)):
            values += self.amp[h] * np.cos(p1[:, h][:, None] + p2[:, h][None, :])
        return ticks, values

    def gradient_grid(self, window: float, step: float):
        n = int(round(2 * window / step))
        ticks = np.linspace(-window, window, n + 1)
        g1 = np.zeros((n + 1, n + 1))
        g2 = np.zeros((n + 1, n + 1))
        for h in range(len(self.amp)):
            s = self.amp[h] * np.sin(
                np.outer(ticks, [self.w[h, 0]]) + (ticks * self.w[h, 1] + self.psi[h])[None, :]
            )
            g1 -= self.w[h, 0] * s
            g2 -= self.w[h, 1] * s
        return ticks, g1, g2

    def is_constant(self, window: float = 1.0, probes: int = 17) -> bool:
        ticks = np.linspace(-window, window, probes)
        yy = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
        return bool(np.max(np.abs(self.gradient(yy)), initial=0.0) < CONSTANT_GRAD_FLOOR)


def restrict(f: TrigPolynomial, plane: PlaneSpec) -> RestrictedFunction:
    return RestrictedFunction(f, plane)


@dataclass(frozen=True)
class CriticalPoint2D:
    y: tuple[float, float]
    value: float
    morse_index: int
    hessian_det: float


@dataclass
class CriticalScan:
    points: list[CriticalPoint2D]
    non_morse: list[CriticalPoint2D]
    degenerate: bool = False

    @property
    def values(self) -> list[float]:
        return [p.value for p in self.points]


def _newton(g: RestrictedFunction, y: np.ndarray):
    best = None
    for _ in range(NEWTON_MAXITER):
        grad = g.gradient(y)
        gn = float(np.hypot(*grad))
        if best is None or gn < best[1]:
            best = (y.copy(), gn)
        if gn < NEWTON_TOL:
            break
        hess = g.hessian(y)
        try:
            dy = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        y = y - dy
    return best


def find_critical_points(g: RestrictedFunction, window: float, grid_step: float | None = None) -> CriticalScan:
    """Critical points of g in [-window, window]^2.

    Newton is seeded from every grid cell where both gradient components
    take both signs on the cell corners. Completeness needs grid_step below
    the smallest oscillation scale; the default is 0.02 / max|k|.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if grid_step is None:
        grid_step = 0.02 / max(g.f.max_freq_norm, 1.0)
    if not 0 < grid_step < window:
        raise ValueError("grid step must satisfy 0 < h < window")
    ticks, g1, g2 = g.gradient_grid(window, grid_step)
    if g.is_constant(window) or max(np.abs(g1).max(initial=0), np.abs(g2).max(initial=0)) < CONSTANT_GRAD_FLOOR:
        yy = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
        reports = [CriticalPoint2D((float(a), float(b)), float(g.evaluate(np.array([a, b]))), -1, 0.0) for a, b in yy]
        return CriticalScan([], reports, degenerate=True)

    def changes(c):
        corners = np.stack([c[:-1, :-1], c[1:, :-1], c[:-1, 1:], c[1:, 1:]])
        return (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0)

    cells = np.argwhere(changes(g1) & changes(g2))
    found: list[np.ndarray] = []
    morse: list[CriticalPoint2D] = []
    non_morse: list[CriticalPoint2D] = []
    for i, j in cells:
        y0 = np.array([ticks[i] + grid_step / 2, ticks[j] + grid_step / 2])
        res = _newton(g, y0)
        if res is None:
            continue
        y, gn = res
        if gn >= CRIT_GRAD_CHECK:
            continue
        if np.any(np.abs(y) > window + 1e-9):
            continue
        if any(np.max(np.abs(y - q)) < 1e-6 for q in found):
            continue
        found.append(y)
        hess = g.hessian(y)
        det = float(np.linalg.det(hess))
        ev = np.linalg.eigvalsh(hess)
        index = int(np.sum(ev < 0))
        cp = CriticalPoint2D((float(y[0]), float(y[1])), float(g.evaluate(y)), index, det)
        (morse if abs(det) > MORSE_DET_FLOOR else non_morse).append(cp)
    morse.sort(key=lambda p: (p.value, p.y))
    non_morse.sort(key=lambda p: (p.value, p.y))
    return CriticalScan(morse, non_morse)


def is_generic(scan: CriticalScan, value_sep: float = 1e-8) -> bool:
    """All critical points Morse and all critical values distinct."""
    if scan.degenerate or scan.non_morse:
        return False
    vals = sorted(scan.values)
    return all(b - a > value_sep for a, b in zip(vals, vals[1:]))
