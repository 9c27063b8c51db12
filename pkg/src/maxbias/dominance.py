"""When does a CM-estimate dominate the S-estimate with the same loss and b?

Under the Gaussian model the two bias curves differ by the sign of

    d_c(eps) = h_c(eps, gamma) - h_c(eps, sigma),
    h_c(eps, s0) = A_{c,eps}(s0) - inf_{s >= s0} A_{c,eps}(s),

so everything reduces to the geometry of the penalized objective A.  The
tuning constant has to clear 1/K (below it the constraint always binds and
the curves coincide) while staying at or below

    c_o = inf over eps of c(eps),   c(eps) = log(sigma_{b,eps}/gamma_{b,eps}) / eps,

above which the CM bias strictly exceeds the S bias somewhere.  When g is
convex, the slope condition

    phi(sigma_{b,0}) >= (1 - g(sigma_M))^2 (1 - b) / (2 - b - g(sigma_M))

guarantees that the infimum of c(eps) is attained in the eps -> 0 limit,
c_o = 1/phi(sigma_{b,0}), and that every c in (c_1, c_o] with

    c_1 = log(sigma_M / sigma_{b,0}) / (b - g(sigma_M))

buys a strict improvement somewhere: the S-estimate is then inadmissible
with respect to maximum bias.  This module evaluates all of these
quantities, assembles them into a report with a three-way verdict, and
locates the smallest b above which a loss family becomes inadmissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._io import fmt, write_rows
from .curves import cm_maxbias, objective_tail_inf, s_maxbias, scale_bounds, scale_objective
from .errors import ConditionError, DomainError
from .gfunction import GFunction, Model, gaussian_model
from .rho import RhoSpec

__all__ = [
    "DOMINATED",
    "EQUAL",
    "INAPPLICABLE",
    "c_of_eps",
    "c_zero_limit",
    "c_naught",
    "c_one",
    "slope_condition",
    "h_gap",
    "d_gap",
    "DominanceReport",
    "dominance_report",
    "inadmissibility_threshold",
    "RatioCurve",
    "cm_vs_s_ratio_curve",
    "write_report",
    "write_c_profile_csv",
]

DOMINATED = "Dominated"
EQUAL = "Equal"
INAPPLICABLE = "Inapplicable"

# Convexity of g is only needed on the scale range the dominance argument
# visits: from the smallest neighborhood scale near breakdown up to a few
# multiples of the phi peak.
_CONVEXITY_DELTA = 1e-3


def _check_b(b: float) -> float:
    if not 0.0 < b < 1.0:
        raise DomainError(f"scale quantile b must lie in (0, 1), got {b}")
    return min(b, 1.0 - b)


def c_of_eps(gf: GFunction, b: float, eps: float) -> float:
    """c(eps) = log(sigma_{b,eps}/gamma_{b,eps}) / eps, the break-even tuning."""
    bp = _check_b(b)
    if not 0.0 < eps < bp:
        raise DomainError(f"eps must lie in (0, {bp:g}), got {eps}")
    sigma, gamma = scale_bounds(gf, b, eps)
    return math.log(sigma / gamma) / eps

def c_zero_limit(gf: GFunction, b: float) -> float:
    """The eps -> 0 limit of c(eps): 1 / phi(g^{-1}(b))."""
    _check_b(b)
    return 1.0 / gf.phi_eval(gf.g_inverse(b))


def _profile_grid(bp: float, n: int) -> np.ndarray:
    # Log-spaced toward both endpoints of (0, bp): the infimum often sits at
    # the eps -> 0 boundary, and c(eps) diverges at eps -> bp.
    half = n // 2
    left = np.logspace(-8, math.log10(0.5), half)
    right = 1.0 - np.logspace(-8, math.log10(0.5), half)[::-1]
    t = np.unique(np.concatenate((left, right)))
    return bp * t


def c_naught(gf: GFunction, b: float, n: int = 512) -> float:
    """inf of c(eps) over (0, min(b, 1-b)), refined grid plus the analytic limit."""
    bp = _check_b(b)
    grid = _profile_grid(bp, n)
    values = [c_of_eps(gf, b, eps) for eps in grid]
    return min(min(values), c_zero_limit(gf, b))


def c_one(gf: GFunction, b: float) -> float:
    """log(sigma_M / sigma_{b,0}) / (b - g(sigma_M)); needs g(sigma_M) < b."""
    _check_b(b)
    sigma_m, _ = gf.peak()
    g_at_peak = gf.g_eval(sigma_m)
    if not g_at_peak < b:
        raise ConditionError(
            f"c_1 requires g(sigma_M) < b; here g(sigma_M) = {g_at_peak:.6g} and b = {b:g}"
        )
    sigma_b0 = gf.g_inverse(b)
    return math.log(sigma_m / sigma_b0) / (b - g_at_peak)


def slope_condition(gf: GFunction, b: float) -> bool:
    """phi(sigma_{b,0}) >= (1-g(sigma_M))^2 (1-b) / (2 - b - g(sigma_M)).

    This bound keeps the derivative of eps*c(eps) above 1/phi(sigma_{b,0})
    everywhere, so the infimum of c(eps) is attained in the eps -> 0 limit.
    """
    _check_b(b)
    sigma_m, _ = gf.peak()
    g_at_peak = gf.g_eval(sigma_m)
    lhs = gf.phi_eval(gf.g_inverse(b))
    rhs = (1.0 - g_at_peak) ** 2 * (1.0 - b) / (2.0 - (b + g_at_peak))
    return bool(lhs >= rhs)


def h_gap(gf: GFunction, c: float, eps: float, sigma: float) -> float:
    """h_c(eps, sigma): how much the objective at sigma exceeds its tail infimum."""
    tail_inf, _ = objective_tail_inf(gf, c, eps, sigma)
    return scale_objective(gf, c, eps, sigma) - tail_inf


def d_gap(gf: GFunction, b: float, c: float, eps: float) -> float:
    """d_c(eps) = h_c(eps, gamma) - h_c(eps, sigma); its sign orders the bias curves."""
    sigma, gamma = scale_bounds(gf, b, eps)
    return h_gap(gf, c, eps, gamma) - h_gap(gf, c, eps, sigma)


@dataclass(frozen=True)
class DominanceReport:
    b: float
    sigma_m: float
    cap_k: float
    g_sigma_m: float
    c0: float
    c0_limit: float
    c1: float | None
    lower_bound_c0: float
    slope_condition: bool
    g_convex: bool
    g_sigma_m_le_b: bool
    dominance_interval: tuple[float, float] | None
    verdict: str
    failed_hypotheses: tuple[str, ...]
    c_profile: np.ndarray  # rows (eps, c(eps))


def dominance_report(
    gf: GFunction, b: float, profile_points: int = 64, infimum_points: int = 512
) -> DominanceReport:
    """Assemble the full tuning diagnosis for the (loss, b) pair under its model."""
    bp = _check_b(b)
    sigma_m, cap = gf.peak()
    g_at_peak = gf.g_eval(sigma_m)
    sigma_b0 = gf.g_inverse(b)

    profile_eps = _profile_grid(bp, profile_points)
    profile = np.column_stack(
        (profile_eps, [c_of_eps(gf, b, e) for e in profile_eps])
    )
    c0 = c_naught(gf, b, n=infimum_points)
    c0_lim = c_zero_limit(gf, b)
    lower_bound = (1.0 - b) / cap + b / gf.phi_eval(sigma_b0)

    gamma_floor = _convexity_floor(gf, b, bp)
    convex = gf.check_g_convex(lo=gamma_floor, hi=4.0 * sigma_m)
    slope_ok = slope_condition(gf, b)
    g_le_b = bool(g_at_peak <= b)

    failed = []
    if not convex:
        failed.append("g-convex")
    if not slope_ok:
        failed.append("slope-condition")
    if not g_le_b:
        failed.append("g(sigma_M)<=b")

    c1_value: float | None
    try:
        c1_value = c_one(gf, b)
    except ConditionError:
        c1_value = None

    if not failed:
        if c1_value is not None and c1_value < c0:
            interval = (c1_value, c0)
            verdict = DOMINATED
        else:
            interval = None
            verdict = EQUAL  # hypotheses hold but no tuning beats 1/K equality
    else:
        interval = None
        verdict = INAPPLICABLE

    return DominanceReport(
        b=b,
        sigma_m=sigma_m,
        cap_k=cap,
        g_sigma_m=g_at_peak,
        c0=c0,
        c0_limit=c0_lim,
        c1=c1_value,
        lower_bound_c0=lower_bound,
        slope_condition=slope_ok,
        g_convex=convex,
        g_sigma_m_le_b=g_le_b,
        dominance_interval=interval,
        verdict=verdict,
        failed_hypotheses=tuple(failed),
        c_profile=profile,
    )


def _convexity_floor(gf: GFunction, b: float, bp: float) -> float:
    # Smallest neighborhood scale the dominance argument can visit: gamma at
    # contamination just shy of breakdown.
    eps = bp - min(_CONVEXITY_DELTA, 0.5 * bp)
    return scale_bounds(gf, b, eps)[1]


def _hypotheses_hold(gf: GFunction, b: float) -> bool:
    sigma_m, _ = gf.peak()
    if not gf.g_eval(sigma_m) <= b:
        return False
    if not slope_condition(gf, b):
        return False
    bp = min(b, 1.0 - b)
    return gf.check_g_convex(lo=_convexity_floor(gf, b, bp), hi=4.0 * sigma_m)


def inadmissibility_threshold(rho: RhoSpec, model: Model | None = None) -> float:
    """Smallest b (to 1e-4) above which the loss family's S-estimate is dominated.

    Bisection on the conjunction of the three dominance hypotheses; which
    clause binds depends on the family, so the conjunction itself is
    bisected.  Gaussian model only.
    """
    model = model or gaussian_model()
    if model.name != "gaussian":
        raise DomainError("the inadmissibility threshold is defined under the Gaussian model")
    gf = GFunction(rho, model)
    if not _hypotheses_hold(gf, 0.5):
        raise ConditionError(
            f"the dominance hypotheses never hold on (0, 0.5] for {rho.family}"
        )
    hi = 0.5
    lo = None
    for b in np.arange(0.495, 0.0, -0.005):
        if _hypotheses_hold(gf, float(b)):
            hi = float(b)
        else:
            lo = float(b)
            break
    if lo is None:
        return hi  # holds on the whole scanned range
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if _hypotheses_hold(gf, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class RatioCurve:
    rows: list[tuple[float, float]]  # (eps, B_CM / B_S)
    skipped: list[tuple[float, str]]
    min_ratio: float


def cm_vs_s_ratio_curve(
    gf: GFunction, b: float, c: float, eps_grid: Sequence[float]
) -> RatioCurve:
    """B_CM / B_S over a grid; points with vanishing S bias are skipped with a flag."""
    rows: list[tuple[float, float]] = []
    skipped: list[tuple[float, str]] = []
    for eps in eps_grid:
        s_point = s_maxbias(gf, b, float(eps))
        if not math.isfinite(s_point.lower) or s_point.lower < 1e-12:
            skipped.append((float(eps), "s-bias-vanishes"))
            continue
        cm_point = cm_maxbias(gf, b, c, float(eps))
        rows.append((float(eps), cm_point.lower / s_point.lower))
    if not rows:
        raise DomainError("no usable grid points for the ratio curve")
    return RatioCurve(rows=rows, skipped=skipped, min_ratio=min(r for _, r in rows))


def write_report(report: DominanceReport, out) -> None:
    """Flat ``key=value`` lines, one per report field (profile exported separately)."""
    interval = report.dominance_interval
    items = [
        ("b", report.b),
        ("sigma_m", report.sigma_m),
        ("cap_k", report.cap_k),
        ("g_sigma_m", report.g_sigma_m),
        ("c0", report.c0),
        ("c0_limit", report.c0_limit),
        ("c1", report.c1),
        ("lower_bound_c0", report.lower_bound_c0),
        ("slope_condition", report.slope_condition),
        ("g_convex", report.g_convex),
        ("g_sigma_m_le_b", report.g_sigma_m_le_b),
        ("dominance_interval_low", interval[0] if interval else None),
        ("dominance_interval_high", interval[1] if interval else None),
        ("verdict", report.verdict),
        ("failed_hypotheses", ";".join(report.failed_hypotheses)),
    ]
    text = "".join(f"{key}={fmt(value)}\n" for key, value in items)
    if hasattr(out, "write"):
        out.write(text)
    else:
        from pathlib import Path

        Path(out).write_text(text)


def write_c_profile_csv(report: DominanceReport, out) -> None:
    """The c(eps) profile as CSV rows ``eps,c_eps``."""
    write_rows(out, ("eps", "c_eps"), report.c_profile)
