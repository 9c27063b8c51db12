"""Maximum asymptotic bias curves for S-, MM- and CM-estimates of regression.

All curves are driven by the contaminated-scale extremes of the defining
M-scale.  Writing r = eps / (1 - eps), the scale constraint E rho = b over an
eps-neighborhood pins

    sigma_{b,eps} = g^{-1}((b - eps) / (1 - eps))   (largest attainable scale)
    gamma_{b,eps} = g^{-1}(b / (1 - eps))           (smallest attainable scale)

and the maximum bias of the S-estimate is a fixed transform of their ratio:
sqrt((sigma/gamma)^2 - 1) under the Gaussian model, sigma/gamma - 1 under the
Cauchy model.  The CM-estimate adds the gap between two half-line infima of
the penalized objective

    A_{c,eps}(s) = c (1 - eps) g(s) + log s,

and the MM-estimate is bracketed between two inversions of the second-loss
profile g2.  The MM bracket collapses to an exact value whenever the upper
inversion does not exceed the lower one; that flag is carried per point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import numerics
from ._io import write_rows
from .errors import BracketError, DomainError, NumericalError
from .gfunction import GFunction, Model
from .rho import RhoSpec, rho_eval

__all__ = [
    "S_KIND",
    "MM_KIND",
    "CM_KIND",
    "EstimatorSpec",
    "s_estimate",
    "mm_estimate",
    "cm_estimate",
    "breakdown_point",
    "BiasPoint",
    "BiasCurve",
    "CriticalPair",
    "scale_bounds",
    "s_maxbias",
    "scale_objective",
    "critical_pair",
    "objective_tail_inf",
    "cm_maxbias",
    "mm_bounds",
    "bias_curve",
    "write_curve_csv",
]

S_KIND = "s"
MM_KIND = "mm"
CM_KIND = "cm"

# Treat c (1 - eps) K within this distance of 1 as the monotone-objective
# case; the infimum is continuous there, so either branch is correct.
_MONOTONE_SLACK = 1e-10


@dataclass(frozen=True)
class EstimatorSpec:
    """An S, MM or CM regression estimate: loss(es), scale quantile b, CM tuning c."""

    kind: str
    b: float
    rho: RhoSpec | None = None
    rho1: RhoSpec | None = None
    rho2: RhoSpec | None = None
    c: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (S_KIND, MM_KIND, CM_KIND):
            raise DomainError(f"unknown estimator kind {self.kind!r}")
        if not 0.0 < self.b < 1.0:
            raise DomainError(f"scale quantile b must lie in (0, 1), got {self.b}")
        if self.kind == MM_KIND:
            if self.rho1 is None or self.rho2 is None:
                raise DomainError("an MM estimate needs both rho1 and rho2")
            _require_dominating_losses(self.rho1, self.rho2)
        else:
            if self.rho is None:
                raise DomainError(f"a {self.kind.upper()} estimate needs rho")
        if self.kind == CM_KIND:
            if self.c is None or not self.c > 0:
                raise DomainError(f"a CM estimate needs a tuning constant c > 0, got {self.c}")

    def label(self) -> str:
        if self.kind == MM_KIND:
            return f"mm(k1={self.rho1.k:g},k2={self.rho2.k:g},b={self.b:g})"
        if self.kind == CM_KIND:
            return f"cm({self.rho.family},k={self.rho.k:g},b={self.b:g},c={self.c:g})"
        return f"s({self.rho.family},k={self.rho.k:g},b={self.b:g})"


def _require_dominating_losses(rho1: RhoSpec, rho2: RhoSpec) -> None:
    # rho1 must dominate rho2 pointwise, strictly wherever not both saturated.
    grid = np.linspace(1e-6, max(rho1.k, rho2.k), 1001)
    r1 = rho_eval(rho1, grid)
    r2 = rho_eval(rho2, grid)
    if np.any(r1 < r2 - 1e-12):
        raise DomainError("MM losses must satisfy rho1 >= rho2 everywhere")
    active = (r1 < 1.0 - 1e-12) | (r2 < 1.0 - 1e-12)
    if not np.all(r1[active] > r2[active]):
        raise DomainError("MM losses must satisfy rho1 > rho2 where not both saturated")


def s_estimate(rho: RhoSpec, b: float) -> EstimatorSpec:
    return EstimatorSpec(kind=S_KIND, b=b, rho=rho)


def mm_estimate(rho1: RhoSpec, rho2: RhoSpec, b: float) -> EstimatorSpec:
    return EstimatorSpec(kind=MM_KIND, b=b, rho1=rho1, rho2=rho2)


def cm_estimate(rho: RhoSpec, b: float, c: float) -> EstimatorSpec:
    return EstimatorSpec(kind=CM_KIND, b=b, rho=rho, c=c)


def breakdown_point(spec: EstimatorSpec) -> float:
    """min(b, 1 - b); for MM this is driven by the preliminary-scale quantile."""
    return min(spec.b, 1.0 - spec.b)


@dataclass(frozen=True)
class BiasPoint:
    """Bias at one contamination level; lower == upper with exact=True unless MM."""

    eps: float
    lower: float
    upper: float
    exact: bool
    flag: str | None = None

    def __post_init__(self) -> None:
        if self.flag is None and not (
            math.isnan(self.lower) or self.lower <= self.upper
        ):
            raise DomainError(f"bias interval is reversed: [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class CriticalPair:
    """The two stationary scales of the penalized objective, around sigma_M."""

    sigma_l: float
    sigma_u: float


@dataclass
class BiasCurve:
    estimator: EstimatorSpec
    model_name: str
    points: list[BiasPoint]
    monotone_violations: list[int] = field(default_factory=list)


def _check_eps(b: float, eps: float) -> float:
    bp = min(b, 1.0 - b)
    if not 0.0 <= eps < bp:
        raise DomainError(f"eps must satisfy 0 <= eps < min(b, 1-b) = {bp:g}, got {eps}")
    return bp


def scale_bounds(gf: GFunction, b: float, eps: float) -> tuple[float, float]:
    """(sigma_{b,eps}, gamma_{b,eps}): sup and inf of the M-scale over the neighborhood."""
    _check_eps(b, eps)
    sigma = gf.g_inverse((b - eps) / (1.0 - eps))
    gamma = gf.g_inverse(b / (1.0 - eps))
    return sigma, gamma


def _is_gaussian(model: Model) -> bool:
    return model.name == "gaussian"


def _ratio_to_bias(ratio: float, gaussian: bool) -> float:
    if gaussian:
        return math.sqrt(max(ratio * ratio - 1.0, 0.0))
    return ratio - 1.0


def s_maxbias(gf: GFunction, b: float, eps: float) -> BiasPoint:
    """Maximum bias of the S-estimate at contamination eps (exact point)."""
    bp = min(b, 1.0 - b)
    if eps == 0.0:
        return BiasPoint(eps, 0.0, 0.0, exact=True)
    if eps >= bp:
        return BiasPoint(eps, math.inf, math.inf, exact=True, flag="beyond-breakdown")
    sigma, gamma = scale_bounds(gf, b, eps)
    value = _ratio_to_bias(sigma / gamma, _is_gaussian(gf.model))
    return BiasPoint(eps, value, value, exact=True)


def scale_objective(gf: GFunction, c: float, eps: float, s: float) -> float:
    """The penalized objective c (1 - eps) g(s) + log s."""
    return c * (1.0 - eps) * gf.g_eval(s) + math.log(s)


def critical_pair(gf: GFunction, c: float, eps: float) -> CriticalPair | None:
    """Both stationary scales (phi(s) = 1/[(1-eps) c]), or None in the monotone case."""
    if c <= 0:
        raise DomainError(f"tuning constant must be positive, got {c}")
    sigma_m, cap = gf.peak()
    level = c * (1.0 - eps) * cap
    if level <= 1.0 + _MONOTONE_SLACK:
        return None
    target = 1.0 / ((1.0 - eps) * c)

    def fn(s: float) -> float:
        return gf.phi_eval(s) - target

    lo = sigma_m
    for _ in range(200):
        lo *= 0.5
        if gf.phi_eval(lo) < target:
            break
    else:
        raise NumericalError("could not bracket the lower stationary scale")
    sigma_l = numerics.find_root(fn, lo, sigma_m)

    hi = sigma_m
    for _ in range(200):
        hi *= 2.0
        if gf.phi_eval(hi) < target:
            break
    else:
        raise NumericalError("could not bracket the upper stationary scale")
    sigma_u = numerics.find_root(fn, sigma_m, hi)
    return CriticalPair(sigma_l=sigma_l, sigma_u=sigma_u)


def objective_tail_inf(
    gf: GFunction, c: float, eps: float, lower: float
) -> tuple[float, float]:
    """(inf, argmin) of the penalized objective over [lower, infinity).

    The objective rises, dips between its two stationary scales, then rises
    again, so the infimum sits either at ``lower`` or at the upper stationary
    scale; in the monotone regime it is always at ``lower``.
    """
    if not lower > 0:
        raise DomainError(f"half-line start must be positive, got {lower}")
    pair = critical_pair(gf, c, eps)
    if pair is None:
        return scale_objective(gf, c, eps, lower), lower
    if lower >= pair.sigma_u:
        return scale_objective(gf, c, eps, lower), lower
    at_upper = scale_objective(gf, c, eps, pair.sigma_u)
    if lower > pair.sigma_l:
        return at_upper, pair.sigma_u
    at_lower = scale_objective(gf, c, eps, lower)
    if at_lower <= at_upper:
        return at_lower, lower
    return at_upper, pair.sigma_u


def cm_maxbias(gf: GFunction, b: float, c: float, eps: float) -> BiasPoint:
    """Maximum bias of the CM-estimate at contamination eps (exact point)."""
    bp = min(b, 1.0 - b)
    if eps == 0.0:
        return BiasPoint(eps, 0.0, 0.0, exact=True)
    if eps >= bp:
        return BiasPoint(eps, math.inf, math.inf, exact=True, flag="beyond-breakdown")
    sigma, gamma = scale_bounds(gf, b, eps)
    inf_from_sigma, _ = objective_tail_inf(gf, c, eps, sigma)
    inf_from_gamma, _ = objective_tail_inf(gf, c, eps, gamma)
    gap = inf_from_sigma - inf_from_gamma
    if _is_gaussian(gf.model):
        value = math.sqrt(max(math.expm1(2.0 * (c * eps + gap)), 0.0))
    else:
        value = math.expm1(c * eps + gap)
    return BiasPoint(eps, value, value, exact=True)


def mm_bounds(gf1: GFunction, gf2: GFunction, b: float, eps: float) -> BiasPoint:
    """Bias bracket [l, max(l, u)] of the MM-estimate; exact when u <= l.

    Both ends invert the second-loss profile g2 at an offset of
    r = eps/(1-eps); the bracket is meaningful only under the applicability
    condition g2(gamma) - g2(sigma) < r, which also forces the lower end to
    sit above the bias of the preliminary S-estimate.  A violated condition
    is reported as a flagged point carrying both sides.
    """
    bp = min(b, 1.0 - b)
    if eps == 0.0:
        return BiasPoint(eps, 0.0, 0.0, exact=True)
    if eps >= bp:
        return BiasPoint(eps, math.inf, math.inf, exact=False, flag="beyond-breakdown")
    gaussian = _is_gaussian(gf1.model)
    sigma, gamma = scale_bounds(gf1, b, eps)
    r = eps / (1.0 - eps)
    g2_sigma = gf2.g_eval(sigma)
    g2_gamma = gf2.g_eval(gamma)
    if not g2_gamma - g2_sigma < r:
        return BiasPoint(
            eps,
            math.nan,
            math.nan,
            exact=False,
            flag=f"mm-condition-violated: g2(gamma)-g2(sigma)={g2_gamma - g2_sigma:.9g} "
            f">= eps/(1-eps)={r:.9g}",
        )
    if g2_sigma + r >= 1.0:
        return BiasPoint(eps, math.inf, math.inf, exact=False, flag="mm-lower-unbounded")
    lower = _ratio_to_bias(sigma / gf2.g_inverse(g2_sigma + r), gaussian)
    if g2_gamma + r >= 1.0:
        upper_raw = math.inf
    else:
        upper_raw = _ratio_to_bias(gamma / gf2.g_inverse(g2_gamma + r), gaussian)
    s_bias = _ratio_to_bias(sigma / gamma, gaussian)
    if lower < s_bias - 1e-9:
        raise NumericalError(
            f"MM lower bound {lower:.9g} fell below the S bias {s_bias:.9g} at eps={eps}"
        )
    return BiasPoint(
        eps,
        lower,
        max(lower, upper_raw),
        exact=bool(upper_raw <= lower),
    )


def _point_for(spec: EstimatorSpec, model: Model, eps: float, cache: dict) -> BiasPoint:
    if spec.kind == S_KIND:
        return s_maxbias(_gf(spec.rho, model, cache), spec.b, eps)
    if spec.kind == CM_KIND:
        return cm_maxbias(_gf(spec.rho, model, cache), spec.b, spec.c, eps)
    return mm_bounds(_gf(spec.rho1, model, cache), _gf(spec.rho2, model, cache), spec.b, eps)


def _gf(rho: RhoSpec, model: Model, cache: dict) -> GFunction:
    key = (rho.family, rho.k)
    if key not in cache:
        cache[key] = GFunction(rho, model)
    return cache[key]


def bias_curve(spec: EstimatorSpec, model: Model, eps_grid: Sequence[float]) -> BiasCurve:
    """Sweep the bias over an increasing eps grid; per-point failures become flags.

    Points at eps = 0 or beyond the breakdown point are filled in from the
    definition (zero bias, infinite bias) without computation.  Monotonicity
    of the lower and upper envelopes is verified afterwards (tolerance 1e-9)
    and violations are recorded, never raised.
    """
    grid = [float(e) for e in eps_grid]
    if any(e < 0 for e in grid) or any(x >= y for x, y in zip(grid, grid[1:])):
        raise DomainError("eps grid must be nonnegative and strictly increasing")
    cache: dict = {}
    points: list[BiasPoint] = []
    for eps in grid:
        try:
            points.append(_point_for(spec, model, eps, cache))
        except (NumericalError, BracketError) as exc:
            points.append(
                BiasPoint(eps, math.nan, math.nan, exact=False, flag=f"numerical-failure: {exc}")
            )
    violations = []
    for i in range(1, len(points)):
        a, bb = points[i - 1], points[i]
        if a.flag or bb.flag:
            continue
        if bb.lower < a.lower - 1e-9 or bb.upper < a.upper - 1e-9:
            violations.append(i)
    return BiasCurve(
        estimator=spec, model_name=model.name, points=points, monotone_violations=violations
    )


def write_curve_csv(curve: BiasCurve, out) -> None:
    """Export rows ``eps,lower,upper,exact``; +inf is rendered as ``inf``."""
    write_rows(
        out,
        ("eps", "lower", "upper", "exact"),
        ((p.eps, p.lower, p.upper, p.exact) for p in curve.points),
    )
