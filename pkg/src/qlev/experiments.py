"""Reusable experiment protocols: perturbation labeling of a rational pair
at several levels, with the stability reruns."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import (
    ClassifierError,
    HyperplaneLabel,
    Kind,
    LevelReport,
    SurveyParams,
    label_by_perturbation,
    label_level,
    survey_level,
)
from .fixtures import PlaneFamily
from .qpfunction import TrigPolynomial, find_critical_points, restrict
from .scanner import near_singular_levels


def neighbor_offsets(radius: float) -> list[tuple[float, float]]:
    return [(radius, 0.0), (-radius, 0.0), (0.0, radius), (0.0, -radius)]


@dataclass
class LevelOutcome:
    level: float
    kinds: dict[str, int]
    unconverged: int
    label: HyperplaneLabel | None
    error: str | None
    report: LevelReport | None
    open_counts: list[int] = field(default_factory=list)

    @property
    def normal(self):
        return None if self.label is None else self.label.normal


@dataclass
class LabelRun:
    name: str
    outcomes: list[LevelOutcome]
    seconds: float

    @property
    def normals(self) -> list:
        return [o.normal for o in self.outcomes]

    def summary(self) -> str:
        parts = []
        for o in self.outcomes:
            tag = o.normal if o.normal is not None else o.error
            parts.append(f"c={o.level:g}: {o.kinds} open/plane={o.open_counts} -> {tag}")
        return f"[{self.name} {self.seconds:.0f}s] " + "; ".join(parts)


def label_run(f: TrigPolynomial, family: PlaneFamily, levels, sp: SurveyParams,
              center=(0.0, 0.0), radius: float = 1e-2, name: str = "run", with_report: bool = True) -> LabelRun:
    """Survey the base plane (s, t) = center and its four neighbors at
    distance ``radius``, then label each level by pooling their strips."""
    t0 = time.perf_counter()
    s0, t0_ = center
    base = family.plane(s0, t0_)
    perts = [family.plane(s0 + ds, t0_ + dt) for ds, dt in neighbor_offsets(radius)]
    outcomes = []
    for c in levels:
        surveys = [survey_level(f, p, c, sp) for p in [base, *perts]]
        kinds = {k.value: 0 for k in Kind}
        unconverged = 0
        for res in surveys:
            for _, lab in res:
                kinds[lab.kind.value] += 1
                unconverged += lab.reason == "WidthNotConverged"
        opened = [sum(lab.kind is Kind.OPEN_STRIP for _, lab in res) for res in surveys]
        label = err = None
        try:
            label = label_by_perturbation(f, base, c, perts, sp, surveys=surveys)
        except ClassifierError as exc:
            err = f"{type(exc).__name__}: {exc}"
        report = label_level(f, base, c, perts, sp, survey=surveys[0]) if with_report else None
        outcomes.append(LevelOutcome(c, kinds, unconverged, label, err, report, opened))
    return LabelRun(name, outcomes, time.perf_counter() - t0)


def regular_levels(f, plane, levels, window: float, eps: float = 1e-3) -> tuple[list[float], list[float]]:
    """Split levels into (regular, near-singular) using critical values of g."""
    scan = find_critical_points(restrict(f, plane), window)
    cv = [p.value for p in scan.points] + [p.value for p in scan.non_morse]
    bad = near_singular_levels(levels, cv, eps)
    return [c for c in levels if c not in bad], bad


def stability_runs(f: TrigPolynomial, family: PlaneFamily, levels, sp: SurveyParams, radius: float = 1e-2,
                   form_eps: float = 1e-3, amp_eps: float = 1e-3, seed: int = 7) -> list[LabelRun]:
    """The base run plus the three reruns that must reproduce its normals:
    forms moved by form_eps, amplitudes scaled by 1 +- amp_eps, doubled sMax."""
    rng = np.random.default_rng(seed)
    m = f.m
    runs = [label_run(f, family, levels, sp, radius=radius, name="base")]
    dp1 = form_eps * rng.uniform(-1, 1, m)
    dp2 = form_eps * rng.uniform(-1, 1, m)
    runs.append(label_run(f, family.shifted(dp1, dp2), levels, sp, radius=radius, name="forms",
                          with_report=False))
    f2 = f.scaled_amplitudes(1.0 + amp_eps * rng.uniform(-1, 1, len(f.a)))
    runs.append(label_run(f2, family, levels, sp, radius=radius, name="amplitudes", with_report=False))
    sp2 = replace(sp, trace=sp.trace.with_(s_max=2 * sp.trace.s_max))
    runs.append(label_run(f, family, levels, sp2, radius=radius, name="2xsMax", with_report=False))
    return runs
