"""Integration of weights over intervals and balls: w(E) = integral of w over E.

Power and constant weights use exact antiderivatives at every scale; tabulated
weights integrate their piecewise-linear interpolant exactly; mixed products
fall back to graded composite Simpson with geometric subdivision toward power
singularities.
"""
from __future__ import annotations

import math

import numpy as np

from .core import (
    Ball,
    Const,
    MorreyParams,
    NonIntegrableWeight,
    Power,
    Product,
    Tabulated,
    Weight,
)

__all__ = ["intersect_1d", "weight_mass_1d", "weight_mass_ball", "MassEvaluator"]

# Geometric subdivision toward power singularities: ratio 1/2, 40 levels.
_GRADE_LEVELS = 40
_SIMPSON_PANELS = 4


def intersect_1d(i1: tuple[float, float], i2: tuple[float, float]):
    """Intersection of two intervals, or None when disjoint (a point counts
    as empty)."""
    lo = max(i1[0], i2[0])
    hi = min(i1[1], i2[1])
    if hi <= lo:
        return None
    return (lo, hi)


def _power_antiderivative(center: float, exponent: float, t: np.ndarray) -> np.ndarray:
    d = np.abs(t - center)
    with np.errstate(divide="ignore"):
        if exponent == -1.0:
            mag = np.log(d)
        else:
            mag = d ** (exponent + 1.0) / (exponent + 1.0)
    return np.sign(t - center) * mag


class MassEvaluator:
    """Vectorized interval masses of one weight.

    Calling with arrays lo, hi returns the elementwise masses; intervals whose
    integral diverges come back as +inf, empty intervals as 0.
    """

    def __init__(self, w: Weight):
        if isinstance(w, Product):
            w = w.simplified()
        self.weight = w
        self._cumulative = None  # lazy, numeric fallback only

    def __call__(self, lo, hi) -> np.ndarray:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        w = self.weight
        if isinstance(w, Const):
            out = w.value * np.maximum(hi - lo, 0.0)
        elif isinstance(w, Power):
            out = self._power_mass(w, lo, hi)
        elif isinstance(w, Tabulated):
            out = self._tabulated_mass(w, lo, hi)
        else:
            out = self._numeric_mass(lo, hi)
        return out

    def ball(self, center, radius) -> np.ndarray:
        """Masses of the balls (center - radius, center + radius).

        Preferred over __call__ with explicit endpoints: the width enters the
        formulas exactly, so tiny balls far from the origin do not lose the
        interval length to endpoint cancellation.
        """
        c = np.asarray(center, dtype=float)
        r = np.asarray(radius, dtype=float)
        w = self.weight
        if isinstance(w, Const):
            return np.broadcast_to(2.0 * w.value * r, np.broadcast(c, r).shape).copy()
        if isinstance(w, Power):
            return self._power_ball(w, c, r)
        # Generic fallback: midpoint rule is exact up to curvature for balls
        # well inside a smooth piece; otherwise endpoint evaluation.
        sing = np.asarray(self.weight.singular_points() or [np.inf])
        dist = np.min(np.abs(c[..., None] - sing[None, :]), axis=-1)
        tiny = (2.0 * r <= 1e-6 * (1.0 + np.abs(c))) & (dist > r)
        out = self(c - r, c + r)
        if np.any(tiny):
            mid = 2.0 * r * self.weight(c)
            out = np.where(tiny, mid, out)
        return out

    @staticmethod
    def _power_ball(w: Power, c: np.ndarray, r: np.ndarray) -> np.ndarray:
        a, nu = float(w.center), w.exponent
        q = nu + 1.0
        d = c - a
        ad = np.abs(d)
        straddle = ad <= r
        with np.errstate(divide="ignore", invalid="ignore"):
            if q > 0:
                inner = ((r + d) ** q + (r - d) ** q) / q
            else:
                inner = np.full_like(np.asarray(d, dtype=float), np.inf)
            u = np.where(ad > 0, r / np.where(ad > 0, ad, 1.0), np.inf)
            if q == 0.0:
                outer = np.log1p(2.0 * r / np.maximum(ad - r, 0.0))
            else:
                # (1+u)^q - (1-u)^q, stable for small u
                small = u <= 0.5
                us = np.where(small, u, 0.25)
                bracket = np.expm1(q * np.log1p(us)) - np.expm1(q * np.log1p(-us))
                direct = (1.0 + u) ** q - np.abs(1.0 - u) ** q
                bracket = np.where(small, bracket, direct)
                outer = ad**q * bracket / q
        mass = np.where(straddle, inner, outer)
        mass = np.where(r <= 0, 0.0, np.maximum(mass, 0.0))
        if nu <= -1.0:
            mass = np.where(straddle & (r > 0), np.inf, mass)
        return mass

    @staticmethod
    def _power_mass(w: Power, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        a, nu = float(w.center), w.exponent
        F = _power_antiderivative
        with np.errstate(invalid="ignore"):
            mass = np.maximum(F(a, nu, hi) - F(a, nu, lo), 0.0)
        empty = hi <= lo
        mass = np.where(empty, 0.0, mass)
        if nu <= -1.0:
            touches = (lo <= a) & (a <= hi) & ~empty
            mass = np.where(touches, np.inf, mass)
        return mass

    @staticmethod
    def _tabulated_mass(w: Tabulated, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        # The piecewise-linear interpolant integrates exactly to a piecewise
        # quadratic; constant extension outside the grid.
        xs = np.asarray(w.xs)
        ys = np.asarray(w.ys)
        seg = 0.5 * (ys[:-1] + ys[1:]) * np.diff(xs)
        cum = np.concatenate([[0.0], np.cumsum(seg)])

        def F(t):
            t = np.asarray(t, dtype=float)
            tc = np.clip(t, xs[0], xs[-1])
            i = np.clip(np.searchsorted(xs, tc, side="right") - 1, 0, len(xs) - 2)
            dt = tc - xs[i]
            h = xs[i + 1] - xs[i]
            slope = (ys[i + 1] - ys[i]) / h
            inner = cum[i] + ys[i] * dt + 0.5 * slope * dt**2
            left = np.where(t < xs[0], (t - xs[0]) * ys[0], 0.0)
            right = np.where(t > xs[-1], (t - xs[-1]) * ys[-1], 0.0)
            return inner + left + right

        return np.maximum(F(hi) - F(lo), 0.0) * (hi > lo)

    # -- numeric fallback for mixed products ---------------------------------

    def _split_product(self):
        w = self.weight
        factors = w.factors if isinstance(w, Product) else (w,)
        powers = [f for f in factors if isinstance(f, Power)]
        rest = [f for f in factors if not isinstance(f, Power)]

        def smooth(x):
            out = np.ones_like(np.asarray(x, dtype=float))
            for f in rest:
                out = out * f(x)
            return out

        return powers, smooth

    def _numeric_mass(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        finite = np.concatenate([lo[np.isfinite(lo)].ravel(), hi[np.isfinite(hi)].ravel()])
        if finite.size == 0:
            return np.zeros(np.broadcast(lo, hi).shape)
        span_lo, span_hi = float(finite.min()), float(finite.max())
        if self._cumulative is None or not self._cumulative.covers(span_lo, span_hi):
            self._cumulative = _NumericCumulative(self, span_lo, span_hi)
        cum = self._cumulative
        mass = np.maximum(cum.F(hi) - cum.F(lo), 0.0) * (hi > lo)
        bad = [p for p in cum.bad_points if p is not None]
        for a in bad:
            mass = np.where((lo <= a) & (a <= hi) & (hi > lo), np.inf, mass)
        return mass


class _NumericCumulative:
    """Graded-Simpson cumulative integral of a mixed-product weight."""

    def __init__(self, ev: MassEvaluator, lo: float, hi: float):
        pad = 0.05 * (hi - lo) + 1e-12
        self.lo = lo - pad
        self.hi = hi + pad
        powers, smooth = ev._split_product()
        self.bad_points = [
            float(p.center) for p in powers if p.exponent <= -1.0
        ] or [None]
        self.bad_points = [p for p in self.bad_points if p is not None]

        sing = sorted({float(p.center) for p in powers if p.exponent != 0})
        sing = [s for s in sing if self.lo < s < self.hi]
        exponents = {
            s: sum(p.exponent for p in powers if float(p.center) == s) for s in sing
        }

        table_nodes: list[float] = []
        w = ev.weight
        factors = w.factors if isinstance(w, Product) else (w,)
        for f in factors:
            if isinstance(f, Tabulated):
                table_nodes.extend(x for x in f.xs if self.lo < x < self.hi)

        knots = np.unique(
            np.concatenate(
                [
                    np.linspace(self.lo, self.hi, 257),
                    np.asarray(sing, dtype=float),
                    np.asarray(table_nodes, dtype=float),
                ]
            )
        )
        # Geometric refinement toward each singular point from both sides.
        extra: list[float] = []
        for s in sing:
            for side in (-1.0, 1.0):
                edge = self.hi if side > 0 else self.lo
                gap0 = abs(edge - s)
                for k in range(1, _GRADE_LEVELS + 1):
                    extra.append(s + side * gap0 * 0.5**k)
        if extra:
            knots = np.unique(np.concatenate([knots, np.asarray(extra)]))

        self.knots = knots
        self.gap_models: dict[float, tuple[float, float]] = {}

        weight_fn = ev.weight
        panel = np.zeros(len(knots) - 1)
        for i in range(len(knots) - 1):
            a, b = knots[i], knots[i + 1]
            s_left = a in exponents
            s_right = b in exponents
            if s_left or s_right:
                s = a if s_left else b
                nu = exponents[s]
                if nu <= -1.0:
                    panel[i] = np.inf
                    continue
                mid = 0.5 * (a + b)
                rest = self._smooth_at(weight_fn, mid, s, nu)
                Fa = _power_antiderivative(s, nu, np.asarray([a, b]))
                panel[i] = rest * max(Fa[1] - Fa[0], 0.0)
                self.gap_models[s] = (nu, rest)
            else:
                panel[i] = _simpson(weight_fn, a, b, _SIMPSON_PANELS)
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])
        self.panel = panel

    @staticmethod
    def _smooth_at(w, x, s, nu):
        val = float(w(np.asarray([x]))[0])
        return val / abs(x - s) ** nu

    def covers(self, lo: float, hi: float) -> bool:
        return self.lo <= lo and hi <= self.hi

    def F(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.lo, self.hi)
        i = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.panel) - 1)
        a = self.knots[i]
        h = self.knots[i + 1] - a
        frac = np.where(h > 0, (t - a) / np.where(h > 0, h, 1.0), 0.0)
        with np.errstate(invalid="ignore"):
            out = self.cum[i] + frac * self.panel[i]
        return np.where(np.isnan(out), np.inf, out)


def _simpson(fn, a: float, b: float, panels: int) -> float:
    xs = np.linspace(a, b, 2 * panels + 1)
    ys = fn(xs)
    h = (b - a) / (2 * panels)
    return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-2:2].sum())


def weight_mass_1d(w: Weight, lo: float, hi: float) -> float:
    """Mass of the weight over [lo, hi]; 0 for empty intervals.

    Raises NonIntegrableWeight when the integral diverges (a power factor
    with exponent <= -1 inside the interval).
    """
    if hi <= lo:
        return 0.0
    mass = float(MassEvaluator(w)(np.asarray([lo]), np.asarray([hi]))[0])
    if math.isinf(mass):
        raise NonIntegrableWeight(
            f"integral of {w} over [{lo}, {hi}] diverges"
        )
    return mass


def _power_disk_mass(center: tuple[float, float], exponent: float, ball: Ball) -> float:
    """Mass of |y - a|^nu over a disk by exact radial reduction about a and
    trapezoid angular quadrature (doubled until relative change < 1e-8)."""
    nu = exponent
    if nu <= -2.0:
        a = np.asarray(center, dtype=float)
        x = np.asarray(ball.center, dtype=float)
        if np.linalg.norm(x - a) <= ball.radius:
            raise NonIntegrableWeight(
                f"|y-a|^{nu} is not integrable over a disk containing a"
            )
    a = np.asarray(center, dtype=float)
    x = np.asarray(ball.center, dtype=float)
    r = ball.radius
    v = x - a
    d = float(np.linalg.norm(v))
    if d == 0.0:
        return 2.0 * math.pi * r ** (nu + 2.0) / (nu + 2.0)
    phi0 = math.atan2(v[1], v[0])

    def integrand(phi):
        b = d * np.cos(phi - phi0)
        disc = b * b - d * d + r * r
        ok = disc > 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        s_hi = np.where(ok, b + root, 0.0)
        s_lo = np.where(ok, np.maximum(b - root, 0.0), 0.0)
        s_hi = np.maximum(s_hi, 0.0)
        q = nu + 2.0
        return (np.maximum(s_hi, 0.0) ** q - s_lo**q) / q

    m = 256
    prev = None
    for _ in range(14):
        phi = np.arange(m) * (2.0 * math.pi / m)
        val = 2.0 * math.pi * float(np.mean(integrand(phi)))
        if prev is not None and abs(val - prev) <= 1e-8 * max(abs(val), 1e-300):
            return val
        prev = val
        m *= 2
    return prev


def weight_mass_ball(w: Weight, ball: Ball, params: MorreyParams) -> float:
    """Mass of the weight over a ball; 1D balls reduce to interval masses,
    2D supports constant and power weights only."""
    if params.n == 1:
        if ball.dim != 1:
            raise ValueError("1D parameters require a 1D ball")
        lo, hi = ball.interval()
        return weight_mass_1d(w, lo, hi)
    if ball.dim != 2:
        raise ValueError("2D parameters require a 2D ball center")
    if isinstance(w, Const):
        return w.value * ball.measure
    if isinstance(w, Power):
        center = w.center
        if np.isscalar(center):
            raise ValueError("2D power weight needs a 2D center point")
        return _power_disk_mass(center, w.exponent, ball)
    raise ValueError(f"unsupported weight for 2D ball mass: {type(w).__name__}")
