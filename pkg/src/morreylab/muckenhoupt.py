"""The classical A_p functional, (p, lam)-admissibility checks, and the
Morrey-adapted Muckenhoupt-type functional built from indicator norms.

The Morrey-type functional of a ball B is

    ||chi_B||_{p,lam;w} / ||chi_B||_{p,lam;w*}  *  avg_B(w^(-1/(lam+p-1)))

with w* the dual weight; at lam = 0 it collapses to ap_functional^(1/p).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Ball,
    BallFamily,
    FunctionalReport,
    MorreyParams,
    NonIntegrableWeight,
    Weight,
    conjugate_exponent,
    dual_weight,
)
from .measure import MassEvaluator, weight_mass_1d, weight_mass_ball
from .morrey import char_norm_weighted, intersection_masses, sup_search

__all__ = [
    "AdmissibilityError",
    "AdmissibilityReport",
    "ap_functional",
    "ap_constant",
    "admissible",
    "apl_functional",
    "apl_constant",
]


class AdmissibilityError(ValueError):
    """A functional was requested for a weight that fails an admissibility
    condition on the given ball."""


def _conjugate_power(p: float) -> float:
    # 1 - p' = -1/(p-1)
    if p <= 1:
        raise ValueError(f"A_p requires p > 1, got {p}")
    return -1.0 / (p - 1.0)


def ap_functional(p: float, w: Weight, ball: Ball) -> float:
    """Single-ball Muckenhoupt quantity avg_B(w) * avg_B(w^(1-p'))^(p-1).

    Raises NonIntegrableWeight when either factor diverges on the ball.
    """
    wd = w ** _conjugate_power(p)
    if ball.dim == 1:
        lo, hi = ball.interval()
        m1 = weight_mass_1d(w, lo, hi)
        m2 = weight_mass_1d(wd, lo, hi)
    else:
        params2 = MorreyParams(p, 0.0, 2)
        m1 = weight_mass_ball(w, ball, params2)
        m2 = weight_mass_ball(wd, ball, params2)
    size = ball.measure
    return (m1 / size) * (m2 / size) ** (p - 1.0)


def ap_constant(p: float, w: Weight, family: BallFamily) -> FunctionalReport:
    """Supremum of ap_functional over a 1D ball family.  Balls where either
    average diverges evaluate to +inf and are recorded as diverging evidence
    rather than raised."""
    ev_w = MassEvaluator(w)
    ev_d = MassEvaluator(w ** _conjugate_power(p))

    def evaluate(C, R):
        size = 2.0 * R
        with np.errstate(invalid="ignore"):
            vals = (ev_w.ball(C, R) / size) * (ev_d.ball(C, R) / size) ** (p - 1.0)
        return np.where(np.isnan(vals), np.inf, vals)

    return sup_search(evaluate, family)


@dataclass
class AdmissibilityReport:
    """The two admissibility suprema for a probe ball and their verdict."""

    condition1: FunctionalReport
    condition2: FunctionalReport

    @property
    def admissible(self) -> bool:
        return not (self.condition1.diverging or self.condition2.diverging)

    def to_dict(self) -> dict:
        return {
            "condition1": self.condition1.to_dict(),
            "condition2": self.condition2.to_dict(),
            "admissible": self.admissible,
        }


def admissible(
    params: MorreyParams,
    w: Weight,
    probe: Ball,
    family: BallFamily | None = None,
) -> AdmissibilityReport:
    """Check the two admissibility suprema for the probe ball B0:

        sup_B w(B n B0) / |B|^lam        (the indicator belongs to the space)
        sup_B w*(B n B0) / |B|^lam       (same for the dual weight)

    The weight is admissible when neither sup diverges under refinement.
    """
    wd = dual_weight(w, params)
    if family is None:
        lo, hi = probe.interval()
        anchors = tuple(sorted(set(w.singular_points() + wd.singular_points())))
        family = BallFamily.covering(lo, hi, anchors=anchors)
    cond1 = _indicator_mass_sup(params, w, probe, family)
    cond2 = _indicator_mass_sup(params, wd, probe, family)
    return AdmissibilityReport(cond1, cond2)


def _indicator_mass_sup(params, w, ball, family) -> FunctionalReport:
    b_lo, b_hi = ball.interval()
    ev = MassEvaluator(w)
    total = float(ev.ball(np.asarray([ball.center]), np.asarray([ball.radius]))[0])
    lam = params.lam

    def evaluate(C, R):
        return intersection_masses(ev, C, R, b_lo, b_hi, total) / (2.0 * R) ** lam

    return sup_search(evaluate, family)


def _inner_family(w: Weight, wd: Weight, ball: Ball, template: BallFamily | None) -> BallFamily:
    lo, hi = ball.interval()
    anchors = tuple(sorted(set(w.singular_points() + wd.singular_points())))
    if template is None:
        return BallFamily.covering(
            lo,
            hi,
            center_count=33,
            radius_count=24,
            refine_rounds=1,
            probe_rounds=2,
            anchors=anchors,
        )
    return BallFamily.covering(
        lo,
        hi,
        center_count=template.center_count,
        radius_count=template.radius_count,
        refine_rounds=template.refine_rounds,
        probe_rounds=template.probe_rounds,
        probe_decades=template.probe_decades,
        divergence_ratio=template.divergence_ratio,
        anchors=anchors,
    )


def _apl_value(
    params: MorreyParams,
    w: Weight,
    wd: Weight,
    ev_recip: MassEvaluator,
    ball: Ball,
    inner: BallFamily | None,
) -> float:
    """Per-ball Morrey-Muckenhoupt value; +inf when any ingredient diverges
    (non-integrable reciprocal average or a diverging indicator norm)."""
    lo, hi = ball.interval()
    if not hi > lo:
        # Ball thinner than float resolution at its center; cannot carry a sup.
        return 0.0
    avg_mass = float(ev_recip.ball(np.asarray([ball.center]), np.asarray([ball.radius]))[0])
    if math.isinf(avg_mass):
        return math.inf
    fam = _inner_family(w, wd, ball, inner)
    num = char_norm_weighted(params, w, ball, fam)
    if num.diverging or math.isinf(num.value):
        return math.inf
    den = char_norm_weighted(params, wd, ball, fam)
    if den.diverging or math.isinf(den.value) or den.value == 0.0:
        return math.inf
    return num.value / den.value * (avg_mass / ball.measure)


def apl_functional(
    params: MorreyParams,
    w: Weight,
    ball: Ball,
    inner_family: BallFamily | None = None,
) -> float:
    """Morrey-Muckenhoupt quantity of a single ball (see module docstring).

    Raises AdmissibilityError when the reciprocal-power average diverges or
    an indicator norm shows divergence, i.e. when the weight fails the
    admissibility hypotheses on this ball.
    """
    beta = conjugate_exponent(params)
    ev_recip = MassEvaluator(w**-beta)
    value = _apl_value(params, w, dual_weight(w, params), ev_recip, ball, inner_family)
    if math.isinf(value):
        raise AdmissibilityError(
            f"weight fails admissibility on ball ({ball.center}, {ball.radius})"
        )
    return value


def apl_constant(
    params: MorreyParams,
    w: Weight,
    outer_family: BallFamily | None = None,
    inner_family: BallFamily | None = None,
) -> FunctionalReport:
    """Supremum of the Morrey-Muckenhoupt functional over an outer ball
    family; each candidate ball spawns its own (coarser) inner norm searches.
    Per-ball admissibility failures become +inf / diverging evidence."""
    beta = conjugate_exponent(params)
    wd = dual_weight(w, params)
    ev_recip = MassEvaluator(w**-beta)
    if outer_family is None:
        outer_family = default_apl_outer_family(w)

    def evaluate(C, R):
        return np.asarray(
            [
                _apl_value(params, w, wd, ev_recip, Ball(c, r), inner_family)
                for c, r in zip(C, R)
            ]
        )

    return sup_search(evaluate, outer_family)


def default_apl_outer_family(
    w: Weight, max_radius_cap: float | None = None
) -> BallFamily:
    """Moderate outer grid around the weight's distinguished points."""
    return BallFamily.covering(
        -2.0,
        2.0,
        center_count=33,
        radius_count=12,
        refine_rounds=2,
        probe_rounds=2,
        anchors=w.singular_points(),
        max_radius_cap=max_radius_cap,
    )
