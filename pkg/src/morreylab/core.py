"""Shared geometry, parameters, and weight/function representations.

Everything here is immutable after construction and safe to share between
concurrent workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateParameters",
    "NonIntegrableWeight",
    "SPHERE_MEASURE",
    "MorreyParams",
    "conjugate_exponent",
    "Ball",
    "Weight",
    "Const",
    "Power",
    "Product",
    "Tabulated",
    "UNIT",
    "dual_weight",
    "StepFunction",
    "BallFamily",
    "FunctionalReport",
]


class DegenerateParameters(ValueError):
    """Raised when a derived exponent is undefined for the given (p, lambda)."""


class NonIntegrableWeight(ValueError):
    """Raised when an integral of a weight over the requested set diverges."""


# Surface measure of the unit sphere, |S^{n-1}|.
SPHERE_MEASURE = {1: 2.0, 2: 2.0 * math.pi}


@dataclass(frozen=True)
class MorreyParams:
    """The exponent triple (p, lam, n) shared by every functional.

    p >= 1 is the integrability exponent, 0 <= lam < 1 the Morrey exponent,
    n in {1, 2} the spatial dimension.  lam = 1 degenerates the norm and is
    rejected.  Hilbert-transform operations additionally require n = 1.
    """

    p: float
    lam: float
    n: int = 1

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not (0 <= self.lam < 1):
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam}")
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")


def conjugate_exponent(params: MorreyParams) -> float:
    """The exponent 1/(lam + p - 1) used for reciprocal-weight averages.

    Degenerate only for p = 1, lam = 0 (where it would be infinite); at
    lam = 0 it reduces to 1/(p - 1), so the reciprocal weight becomes the
    classical conjugate weight w^(1 - p').
    """
    denom = params.lam + params.p - 1.0
    if denom <= 0:
        raise DegenerateParameters(
            f"lambda + p - 1 = {denom} is not positive (p={params.p}, lambda={params.lam})"
        )
    return 1.0 / denom


@dataclass(frozen=True)
class Ball:
    """Open ball B(center, radius); an interval when the center is scalar."""

    center: float | tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return 1 if np.isscalar(self.center) else len(self.center)

    @property
    def measure(self) -> float:
        """Lebesgue measure: 2r in 1D, pi r^2 in 2D."""
        if self.dim == 1:
            return 2.0 * self.radius
        return math.pi * self.radius**2

    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise ValueError("interval() requires a 1D ball")
        return (self.center - self.radius, self.center + self.radius)

    @staticmethod
    def from_interval(lo: float, hi: float) -> "Ball":
        if not hi > lo:
            raise ValueError(f"need hi > lo, got ({lo}, {hi})")
        return Ball(0.5 * (lo + hi), 0.5 * (hi - lo))


def _as_point(x) -> float | tuple[float, float]:
    if np.isscalar(x):
        return float(x)
    return tuple(float(v) for v in x)


class Weight:
    """Symbolic a.e.-positive weight on R^n, closed under real powers."""

    def __call__(self, x):
        raise NotImplementedError

    def __pow__(self, s: float) -> "Weight":
        raise NotImplementedError

    def simplified(self) -> "Weight":
        return self

    def singular_points(self) -> tuple[float, ...]:
        """1D locations where the weight vanishes or blows up."""
        return ()

    def locally_integrable(self, n: int = 1) -> bool:
        return True


@dataclass(frozen=True)
class Const(Weight):
    """Constant weight; Const(1) is the unweighted case."""

    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"constant weight must be positive, got {self.value}")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def __pow__(self, s: float) -> Weight:
        return Const(self.value**s)


UNIT = Const(1.0)


@dataclass(frozen=True)
class Power(Weight):
    """Power weight |x - center|^exponent.

    Construction accepts any exponent; exponent <= -n fails the local
    integrability check and integration across the center raises.
    """

    center: float | tuple[float, float] = 0.0
    exponent: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.isscalar(self.center):
            d = np.abs(x - self.center)
        else:
            d = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        with np.errstate(divide="ignore"):
            return d**self.exponent

    def __pow__(self, s: float) -> Weight:
        return Power(self.center, self.exponent * s)

    def singular_points(self) -> tuple[float, ...]:
        if self.exponent == 0 or not np.isscalar(self.center):
            return ()
        return (float(self.center),)

    def locally_integrable(self, n: int = 1) -> bool:
        return self.exponent > -n


@dataclass(frozen=True)
class Product(Weight):
    """Pointwise product of weights."""

    factors: tuple[Weight, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("product weight needs at least one factor")

    def __call__(self, x):
        out = self.factors[0](x)
        for f in self.factors[1:]:
            out = out * f(x)
        return out

    def __pow__(self, s: float) -> Weight:
        return Product(tuple(f**s for f in self.factors)).simplified()

    def simplified(self) -> Weight:
        """Merge constants and same-center power factors; unwrap singletons."""
        const = 1.0
        powers: dict[float | tuple, float] = {}
        rest: list[Weight] = []
        for f in self.factors:
            f = f.simplified()
            if isinstance(f, Const):
                const *= f.value
            elif isinstance(f, Power):
                powers[f.center] = powers.get(f.center, 0.0) + f.exponent
            else:
                rest.append(f)
        out: list[Weight] = [Power(c, e) for c, e in powers.items() if e != 0]
        out.extend(rest)
        if const != 1.0 or not out:
            out.insert(0, Const(const))
        if len(out) == 1:
            return out[0]
        return Product(tuple(out))

    def singular_points(self) -> tuple[float, ...]:
        pts: list[float] = []
        for f in self.factors:
            pts.extend(f.singular_points())
        return tuple(sorted(set(pts)))

    def locally_integrable(self, n: int = 1) -> bool:
        # Sufficient for the supported combinations (distinct singular points).
        simplified = self.simplified()
        if isinstance(simplified, Product):
            return all(f.locally_integrable(n) for f in simplified.factors)
        return simplified.locally_integrable(n)


@dataclass(frozen=True)
class Tabulated(Weight):
    """Piecewise-linear interpolant of positive samples, extended by its
    endpoint values outside the grid."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ValueError("tabulated weight needs matching grids of length >= 2")
        if not all(b > a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("tabulated grid must be strictly increasing")
        if not all(y > 0 for y in self.ys):
            raise ValueError("tabulated samples must be positive")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    def __pow__(self, s: float) -> Weight:
        return Tabulated(self.xs, tuple(y**s for y in self.ys))


def dual_weight(w: Weight, params: MorreyParams) -> Weight:
    """The companion weight w^(-(1-lam)/(lam+p-1)).

    At lam = 0 the exponent is 1 - p', recovering the classical conjugate
    weight.  The result may fail local integrability (e.g. a power weight
    landing exactly on exponent -n); the flag is queryable on the result,
    construction never raises for that.
    """
    s = -(1.0 - params.lam) * conjugate_exponent(params)
    return w**s


@dataclass(frozen=True)
class StepFunction:
    """Compactly supported piecewise-constant function on the line.

    Canonical form: adjacent cells with equal values are merged and zero
    end cells trimmed, so jump locations are exactly the breakpoints.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = [float(b) for b in self.breakpoints]
        vals = [float(v) for v in self.values]
        if len(bp) < 2 or len(vals) != len(bp) - 1:
            raise ValueError("need k+1 breakpoints for k >= 1 cell values")
        if not all(b > a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        merged_b = [bp[0]]
        merged_v: list[float] = []
        for b, v in zip(bp[1:], vals):
            if merged_v and v == merged_v[-1]:
                merged_b[-1] = b
            else:
                merged_b.append(b)
                merged_v.append(v)
        while len(merged_v) > 1 and merged_v[0] == 0.0:
            merged_v.pop(0)
            merged_b.pop(0)
        while len(merged_v) > 1 and merged_v[-1] == 0.0:
            merged_v.pop()
            merged_b.pop()
        object.__setattr__(self, "breakpoints", tuple(merged_b))
        object.__setattr__(self, "values", tuple(merged_v))

    @staticmethod
    def indicator(lo: float, hi: float) -> "StepFunction":
        return StepFunction((lo, hi), (1.0,))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        idx = np.searchsorted(bp, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.values)) & (x < bp[-1])
        vals = np.asarray(self.values)
        out = np.where(inside, vals[np.clip(idx, 0, len(self.values) - 1)], 0.0)
        return out if out.ndim else float(out)

    def scaled(self, c: float) -> "StepFunction":
        if c == 0.0:
            return StepFunction(self.breakpoints[:2], (0.0,))
        return StepFunction(self.breakpoints, tuple(c * v for v in self.values))

    @property
    def support(self) -> tuple[float, float]:
        return (self.breakpoints[0], self.breakpoints[-1])


@dataclass(frozen=True)
class BallFamily:
    """Finite search grid of 1D balls: centers x log-spaced radii.

    The grid is the finite surrogate for a supremum over all balls.  Zoom
    rounds refine around the running argmax; probe rounds extend the radius
    range downward by `probe_decades` per round to detect blow-up as r -> 0
    (value growth >= divergence_ratio across each of the last two probe
    rounds flags divergence).  `extra_centers` pins distinguished points
    (weight singularities, target centers) into the center grid.
    """

    center_lo: float
    center_hi: float
    center_count: int
    radius_min: float
    radius_max: float
    radius_count: int
    refine_rounds: int = 3
    max_radius_cap: float | None = None
    probe_rounds: int = 3
    probe_decades: float = 6.0
    divergence_ratio: float = 2.0
    extra_centers: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.center_hi > self.center_lo:
            raise ValueError("center box must have positive length")
        if not (0 < self.radius_min < self.radius_max):
            raise ValueError("need 0 < radius_min < radius_max")
        if self.center_count < 2 or self.radius_count < 2:
            raise ValueError("center_count and radius_count must be >= 2")
        if self.max_radius_cap is not None and self.max_radius_cap <= self.radius_min:
            raise ValueError("max_radius_cap must exceed radius_min")

    def centers(self) -> np.ndarray:
        grid = np.linspace(self.center_lo, self.center_hi, self.center_count)
        if self.extra_centers:
            extra = [c for c in self.extra_centers if self.center_lo <= c <= self.center_hi]
            grid = np.unique(np.concatenate([grid, np.asarray(extra, dtype=float)]))
        return grid

    def radii(self) -> np.ndarray:
        hi = self.radius_max
        if self.max_radius_cap is not None:
            hi = min(hi, self.max_radius_cap)
        return np.geomspace(self.radius_min, hi, self.radius_count)

    @staticmethod
    def covering(
        lo: float,
        hi: float,
        *,
        center_count: int = 129,
        radius_count: int = 64,
        anchors: tuple[float, ...] = (),
        max_radius_cap: float | None = None,
        **overrides,
    ) -> "BallFamily":
        """Family covering the support [lo, hi]: centers over the support
        enlarged by twice the maximal radius, radii from 1e-4 of the support
        length up to twice its length."""
        length = hi - lo
        if not length > 0:
            raise ValueError("support must have positive length")
        r_max = overrides.pop("radius_max", 2.0 * length)
        r_min = overrides.pop("radius_min", 1e-4 * length)
        return BallFamily(
            center_lo=lo - 2.0 * r_max,
            center_hi=hi + 2.0 * r_max,
            center_count=center_count,
            radius_min=r_min,
            radius_max=r_max,
            radius_count=radius_count,
            max_radius_cap=max_radius_cap,
            extra_centers=tuple(sorted(set((lo, hi, 0.5 * (lo + hi)) + tuple(anchors)))),
            **overrides,
        )

    def to_dict(self) -> dict:
        return {
            "center_lo": self.center_lo,
            "center_hi": self.center_hi,
            "center_count": self.center_count,
            "radius_min": self.radius_min,
            "radius_max": self.radius_max,
            "radius_count": self.radius_count,
            "refine_rounds": self.refine_rounds,
            "max_radius_cap": self.max_radius_cap,
            "probe_rounds": self.probe_rounds,
            "probe_decades": self.probe_decades,
            "divergence_ratio": self.divergence_ratio,
            "extra_centers": list(self.extra_centers),
        }


def _json_float(x: float):
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


@dataclass
class FunctionalReport:
    """Result of a sup-type functional evaluated over a ball family.

    `value` is a lower-bound estimate of the true supremum, `refine_trace`
    the non-decreasing best value after each refinement round, `diverging`
    whether the probe rounds exhibit sustained growth (or a candidate ball
    evaluated to +inf).
    """

    value: float
    argmax: Ball | None
    family: BallFamily
    refine_trace: list[float]
    diverging: bool
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        argmax = None
        if self.argmax is not None:
            argmax = {"center": self.argmax.center, "radius": self.argmax.radius}
        return {
            "value": _json_float(self.value),
            "argmax": argmax,
            "family": self.family.to_dict(),
            "refine_trace": [_json_float(v) for v in self.refine_trace],
            "diverging": self.diverging,
            "warnings": list(self.warnings),
        }
