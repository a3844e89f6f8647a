"""Weighted Morrey norm estimators.

The central primitive is `sup_search`: a deterministic maximize-over-balls
engine with local zoom refinement and small-radius divergence probes.  Every
sup-type functional in the package is evaluated through it, so all report
values are certified lower bounds of the true suprema.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Ball, BallFamily, FunctionalReport, MorreyParams, Power, Weight
from .measure import MassEvaluator

__all__ = [
    "sup_search",
    "char_norm_unweighted",
    "char_norm_weighted",
    "morrey_norm_step",
    "exponent_fit",
    "ExponentFit",
    "char_scaling_exponent",
]

_RADIUS_FLOOR = 1e-300


def _lex_better(c1, r1, c2, r2) -> bool:
    return (c1, r1) < (c2, r2)


def sup_search(evaluate, family: BallFamily, transform=None) -> FunctionalReport:
    """Maximize a nonnegative ball functional over a finite family.

    `evaluate(centers, radii)` must be vectorized and may return +inf for
    balls where the functional diverges outright.  The search runs the base
    grid, `refine_rounds` zoom rounds around the running argmax (window of
    two grid steps, same grid counts), then `probe_rounds` rounds extending
    the radius range downward by `probe_decades` each to detect blow-up as
    r -> 0.  Ties in the argmax resolve to the lexicographically smallest
    (center, radius).  `transform` (monotone) is applied to the reported
    value and trace only; divergence growth is measured on raw values.
    """
    warnings: list[str] = []
    centers = family.centers()
    radii = family.radii()
    cap = family.max_radius_cap

    best_val = 0.0
    best_c = best_r = None
    trace_raw: list[float] = []
    hit_inf = False

    def run(cs: np.ndarray, rs: np.ndarray):
        nonlocal best_val, best_c, best_r, hit_inf
        C = np.repeat(cs, len(rs))
        R = np.tile(rs, len(cs))
        vals = np.asarray(evaluate(C, R), dtype=float)
        if np.isnan(vals).any():
            warnings.append("evaluator produced NaN; treated as 0")
            vals = np.nan_to_num(vals, nan=0.0, posinf=np.inf)
        vals = np.maximum(vals, 0.0)
        i = int(np.argmax(vals))
        v, c, r = float(vals[i]), float(C[i]), float(R[i])
        if np.isinf(v):
            hit_inf = True
        if v > best_val or (
            v == best_val and best_c is not None and _lex_better(c, r, best_c, best_r)
        ):
            best_val, best_c, best_r = v, c, r
        elif best_c is None and v >= best_val:
            best_val, best_c, best_r = v, c, r
        return v

    run(centers, radii)
    trace_raw.append(best_val)

    c_step = (centers[-1] - centers[0]) / max(len(centers) - 1, 1)
    r_ratio = (radii[-1] / radii[0]) ** (1.0 / max(len(radii) - 1, 1))

    for _ in range(family.refine_rounds):
        if hit_inf or best_val == 0.0 or best_c is None:
            break
        cs = np.linspace(best_c - 2 * c_step, best_c + 2 * c_step, family.center_count)
        r_lo = max(best_r / r_ratio**2, _RADIUS_FLOOR)
        r_hi = best_r * r_ratio**2
        if cap is not None:
            r_hi = min(r_hi, cap)
        rs = np.geomspace(r_lo, max(r_hi, r_lo * (1 + 1e-12)), family.radius_count)
        run(cs, rs)
        trace_raw.append(best_val)
        c_step = (cs[-1] - cs[0]) / max(len(cs) - 1, 1)
        r_ratio = (rs[-1] / rs[0]) ** (1.0 / max(len(rs) - 1, 1))

    probe_tail: list[float] = []
    r_edge = family.radius_min
    for _ in range(family.probe_rounds):
        if hit_inf:
            break
        r_next = r_edge * 10.0 ** (-family.probe_decades)
        if r_next <= _RADIUS_FLOOR:
            break
        rs = np.geomspace(r_next, r_edge, family.radius_count)
        run(centers, rs)
        trace_raw.append(best_val)
        probe_tail.append(best_val)
        r_edge = r_next

    diverging = hit_inf
    if not diverging and len(probe_tail) >= 2:
        base = trace_raw[len(trace_raw) - len(probe_tail) - 1]
        seq = [base] + probe_tail
        growths = [
            (b / a) if a > 0 else (np.inf if b > 0 else 1.0)
            for a, b in zip(seq, seq[1:])
        ]
        if all(g >= family.divergence_ratio for g in growths[-2:]):
            diverging = True

    if transform is None:
        value = best_val
        trace = list(trace_raw)
    else:
        value = float(transform(best_val)) if np.isfinite(best_val) else best_val
        trace = [float(transform(v)) if np.isfinite(v) else v for v in trace_raw]
    argmax = Ball(best_c, best_r) if best_c is not None and best_r is not None else None
    return FunctionalReport(
        value=value,
        argmax=argmax,
        family=family,
        refine_trace=trace,
        diverging=diverging,
        warnings=warnings,
    )


def char_norm_unweighted(params: MorreyParams, ball: Ball) -> float:
    """Closed-form Morrey norm of a ball indicator: |B|^((1-lam)/p) with the
    Lebesgue measure of the ball."""
    return ball.measure ** ((1.0 - params.lam) / params.p)


def intersection_masses(
    ev: MassEvaluator,
    C: np.ndarray,
    R: np.ndarray,
    lo: float,
    hi: float,
    total: float,
) -> np.ndarray:
    """Masses of w over (C - R, C + R) intersected with [lo, hi].

    `total` is the mass of w over the whole [lo, hi].  Containment cases use
    the stable ball-mass path / the precomputed total, so tiny balls near or
    inside the target never lose the interval width to cancellation.
    """
    clipped = ev(np.maximum(C - R, lo), np.minimum(C + R, hi))
    inside = (C - R >= lo) & (C + R <= hi)
    if inside.any():
        clipped = np.where(inside, ev.ball(C, R), clipped)
    covers = (C - R <= lo) & (C + R >= hi)
    if covers.any():
        clipped = np.where(covers, total, clipped)
    return clipped


def _require_1d(params: MorreyParams, what: str):
    if params.n != 1:
        raise ValueError(f"{what} is implemented for n = 1 only")


def default_char_family(w: Weight, ball: Ball, **overrides) -> BallFamily:
    lo, hi = ball.interval()
    return BallFamily.covering(lo, hi, anchors=w.singular_points(), **overrides)


def char_norm_weighted(
    params: MorreyParams, w: Weight, ball: Ball, family: BallFamily | None = None
) -> FunctionalReport:
    """Grid estimator of the weighted Morrey norm of a ball indicator:
    sup over the family of (w(B n B0) / |B|^lam)^(1/p).

    The value is a certified lower bound of the true norm; divergence of the
    probe trace signals that the indicator fails to belong to the space.
    """
    _require_1d(params, "char_norm_weighted")
    if family is None:
        family = default_char_family(w, ball)
    b_lo, b_hi = ball.interval()
    ev = MassEvaluator(w)
    total = float(ev.ball(np.asarray([ball.center]), np.asarray([ball.radius]))[0])
    lam, p = params.lam, params.p

    def evaluate(C, R):
        return intersection_masses(ev, C, R, b_lo, b_hi, total) / (2.0 * R) ** lam

    return sup_search(evaluate, family, transform=lambda v: v ** (1.0 / p))


def morrey_norm_step(
    params: MorreyParams, w: Weight, f, family: BallFamily | None = None
) -> FunctionalReport:
    """Morrey norm estimator for a step function: the per-ball integral of
    |f|^p w is computed cell-exactly through the weight's antiderivative."""
    _require_1d(params, "morrey_norm_step")
    if family is None:
        lo, hi = f.support
        family = BallFamily.covering(lo, hi, anchors=w.singular_points())
    bp = np.asarray(f.breakpoints)
    vp = np.abs(np.asarray(f.values)) ** params.p
    ev = MassEvaluator(w)
    cells = [
        (bp[j], bp[j + 1], float(ev(np.asarray([bp[j]]), np.asarray([bp[j + 1]]))[0]))
        for j in range(len(vp))
        if vp[j] > 0
    ]
    weights = vp[vp > 0]
    lam, p = params.lam, params.p

    def evaluate(C, R):
        out = np.zeros_like(C)
        for (a, b, total), vj in zip(cells, weights):
            out = out + vj * intersection_masses(ev, C, R, a, b, total)
        return out / (2.0 * R) ** lam

    return sup_search(evaluate, family, transform=lambda v: v ** (1.0 / p))


def char_scaling_exponent(params: MorreyParams, nu: float) -> float:
    """Growth exponent of the weighted indicator norm of B(a, r) in the ball
    measure, for a power weight centered at a: (n + nu - n lam)/(n p)."""
    n = params.n
    return (n + nu - n * params.lam) / (n * params.p)


@dataclass
class ExponentFit:
    """Least-squares slope of log norm against log ball measure."""

    slope: float
    residual: float
    radii: list[float]
    norms: list[float]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "residual": self.residual,
            "radii": list(self.radii),
            "norms": list(self.norms),
            "warnings": list(self.warnings),
        }


def exponent_fit(
    params: MorreyParams,
    w: Power,
    radii,
    residual_threshold: float = 0.05,
) -> ExponentFit:
    """Fit the scaling exponent of r -> ||chi_{B(a,r)}|| for a power weight
    centered at a; the slope should match char_scaling_exponent."""
    _require_1d(params, "exponent_fit")
    if not isinstance(w, Power):
        raise TypeError("exponent_fit requires a power weight")
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    warnings: list[str] = []
    norms = []
    for r in radii:
        rep = char_norm_weighted(params, w, Ball(float(w.center), r))
        if rep.diverging:
            warnings.append(f"norm estimate diverging at radius {r}")
        norms.append(rep.value)
    x = np.log(2.0 * np.asarray(radii))
    y = np.log(np.asarray(norms))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    if resid > residual_threshold:
        warnings.append(f"log-log fit residual {resid:.3g} above {residual_threshold}")
    return ExponentFit(float(slope), resid, radii, norms, warnings)
