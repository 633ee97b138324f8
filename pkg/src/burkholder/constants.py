"""The root z0 of g, the sharp constant C_{p,d} and the auxiliary constants
c, s1, z1 that glue g to the payoff v(s) = ((1+s)/2)^p - K^p ((1-s)/2)^p,
K = (1+z0)/(1-z0)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    InternalInconsistency,
    RootBeyondRange,
    SeriesBudgetExceeded,
    Z1NotFound,
)
from .report import GridReport, margin_report
from .specfun import Params, SeriesSolution, build_series, evaluate, ode_residual

ROOT_SCAN_POINTS = 4096
ROOT_XTOL = 1e-14
RATIO_GRID_POINTS = 4001
NEAR_CRITICAL = 1.0 - 1e-4
S_MAX_SCHEDULE = (0.99, 0.999, 0.9999)

CSV_HEADER = ("p", "d", "z0", "C_pd", "c", "s1", "z1", "status")


@dataclass(frozen=True)
class ConstantsBundle:
    params: Params
    z0: Optional[float]
    C_pd: float  # math.inf when no finite constant exists
    c: Optional[float]
    s1: Optional[float]
    z1: Optional[float]
    gprime_z0: Optional[float]
    status: str
    c_upper: Optional[float] = None
    z1_candidates: tuple = field(default=())

    @property
    def K(self) -> float:
        return (1 + self.z0) / (1 - self.z0)

    @property
    def finite(self) -> bool:
        return self.z0 is not None

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "z0": self.z0,
            "C_pd": self.C_pd if math.isfinite(self.C_pd) else None,
            "c": self.c,
            "s1": self.s1,
            "z1": self.z1,
            "gprime_z0": self.gprime_z0,
            "c_upper": self.c_upper,
            "z1_candidates": list(self.z1_candidates),
            "status": self.status,
        }

    def csv_row(self) -> list[str]:
        return [fmt17(self.params.p), fmt17(self.params.d), fmt17(self.z0),
                fmt17(self.C_pd if self.finite else None), fmt17(self.c),
                fmt17(self.s1), fmt17(self.z1), self.status]


def fmt17(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


# -- the payoff on the section -------------------------------------------------

def v_func(s, p: float, K: float, order: int = 0):
    s = np.asarray(s, dtype=float)
    a, b = (1 + s) / 2, (1 - s) / 2
    Kp = K**p
    with np.errstate(divide="ignore", invalid="ignore"):
        if order == 0:
            out = a**p - Kp * b**p
        elif order == 1:
            out = p / 2 * (a ** (p - 1) + Kp * b ** (p - 1))
        elif order == 2:
            out = p * (p - 1) / 4 * (a ** (p - 2) - Kp * b ** (p - 2))
        else:
            raise ValueError(order)
    return float(out) if out.ndim == 0 else out


def local_scale(series: SeriesSolution, s):
    return (1 + np.abs(evaluate(series, s, 0)) + np.abs(evaluate(series, s, 1))
            + np.abs(evaluate(series, s, 2)))


# -- operations ----------------------------------------------------------------

def find_z0(series: SeriesSolution) -> Optional[float]:
    """Smallest root of g in [-1, s_max_certified], or None when p + d <= 2."""
    params = series.params
    grid = np.linspace(-1.0, series.s_max_certified, ROOT_SCAN_POINTS)
    vals = evaluate(series, grid, 0)
    hits = np.nonzero(vals >= 0)[0]
    if hits.size == 0:
        if params.supercritical:
            raise RootBeyondRange(
                f"g_{{p={params.p}, d={params.d}}} has no sign change on "
                f"[-1, {series.s_max_certified}]; rebuild with a larger s_max")
        return None
    if not params.supercritical:
        raise InternalInconsistency(
            f"g changes sign at s~{grid[hits[0]]} although p + d <= 2")
    i = int(hits[0])
    if vals[i] == 0.0:
        z0 = float(grid[i])
    else:
        lo, hi = float(grid[i - 1]), float(grid[i])
        while hi - lo >= ROOT_XTOL:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if evaluate(series, mid, 0) < 0:
                lo = mid
            else:
                hi = mid
        z0 = 0.5 * (lo + hi)
        # one Newton step, kept only if it stays in the bracket and shrinks |g|
        g0 = evaluate(series, z0, 0)
        cand = z0 - g0 / evaluate(series, z0, 1)
        if lo <= cand <= hi and abs(evaluate(series, cand, 0)) <= abs(g0):
            z0 = float(cand)
    if not evaluate(series, z0, 1) > 0:
        raise InternalInconsistency(f"g'(z0) <= 0 at z0={z0}")
    return z0


def compute_C(params: Params, z0: float) -> float:
    if params.p <= 2:
        return (1 + z0) / (1 - z0)
    return (1 - z0) / (1 + z0)


def tangency_formula(p: float, z0: float, gprime_z0: float) -> float:
    """The constant c with c g'(z0) = v'(z0)."""
    return 2 * p * (1 + z0) ** (p - 1) / (2**p * gprime_z0 * (1 - z0))


@dataclass(frozen=True)
class _RatioMin:
    c: float
    argmin: float
    boundary: float
    candidates: tuple


def _ratio_infimum(series: SeriesSolution, z0: float) -> _RatioMin:
    """inf of v/g over [-1, z0) for p < 1, with the limit at z0 as a candidate."""
    p = series.params.p
    K = (1 + z0) / (1 - z0)
    boundary = tangency_formula(p, z0, evaluate(series, z0, 1))
    grid = np.linspace(-1.0, z0, RATIO_GRID_POINTS)[:-1]
    gv = evaluate(series, grid, 0)
    if np.any(gv >= 0):
        raise InternalInconsistency("g vanishes before its first root")
    ratio = v_func(grid, p, K) / gv
    if not np.all(np.isfinite(ratio)):
        raise InternalInconsistency("non-finite v/g ratio on [-1, z0)")
    i = int(np.argmin(ratio))

    # every local grid minimum within a relative 1e-9 of the global one
    left = np.r_[True, ratio[1:] <= ratio[:-1]]
    right = np.r_[ratio[:-1] <= ratio[1:], True]
    near = ratio <= ratio[i] * (1 + 1e-9)
    cands = [float(x) for x in grid[left & right & near]]

    if ratio[i] >= boundary or i == ratio.size - 1:
        # the last grid point only approximates the limit at z0
        interior = [x for x in cands if x < grid[-1] and
                    v_func(x, p, K) / evaluate(series, x, 0) <= boundary * (1 + 1e-9)]
        return _RatioMin(boundary, z0, boundary, tuple(interior) + (z0,))

    lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, ratio.size - 1)])

    def slope(s):
        # sign of (v/g)'
        return v_func(s, p, K, 1) * evaluate(series, s, 0) - v_func(s, p, K) * evaluate(series, s, 1)

    if lo > -1.0 and slope(lo) < 0 < slope(hi):
        s_star = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        res = minimize_scalar(lambda s: v_func(s, p, K) / evaluate(series, s, 0),
                              bracket=(lo, float(grid[i]), hi), method="golden",
                              options={"xtol": 1e-12})
        s_star = float(res.x)
    c = min(float(ratio[i]), v_func(s_star, p, K) / evaluate(series, s_star, 0))
    if c == ratio[i]:
        s_star = float(grid[i])
    return _RatioMin(c, float(s_star), boundary, tuple(cands))


def compute_c(series: SeriesSolution, z0: float) -> float:
    p = series.params.p
    if p >= 1:
        return tangency_formula(p, z0, evaluate(series, z0, 1))
    return _ratio_infimum(series, z0).c


def compute_s1(params: Params, z0: float) -> Optional[float]:
    """Root of (1+s)^(p-2) = K^p (1-s)^(p-2); absent for p = 2."""
    p = params.p
    if p == 2:
        return None
    K = (1 + z0) / (1 - z0)
    t = K ** (p / (p - 2))
    return (t - 1) / (t + 1)


def compute_z1(series: SeriesSolution, z0: float, c: float) -> float:
    p = series.params.p
    if p >= 1:
        return z0
    z1 = _ratio_infimum(series, z0).argmin
    _validate_tangency(series, z0, c, z1)
    return z1


def _validate_tangency(series, z0, c, z1):
    p = series.params.p
    K = (1 + z0) / (1 - z0)
    sc = float(local_scale(series, z1))
    gap0 = abs(c * evaluate(series, z1, 0) - v_func(z1, p, K))
    gap1 = abs(c * evaluate(series, z1, 1) - v_func(z1, p, K, 1))
    s1 = compute_s1(series.params, z0)
    problems = []
    if gap0 > 1e-10 * sc:
        problems.append(f"|cg - v| = {gap0:.3e}")
    if gap1 > 1e-8 * sc:
        problems.append(f"|cg' - v'| = {gap1:.3e}")
    if s1 is not None and not (s1 < z1 <= z0):
        problems.append(f"z1={z1} outside (s1={s1}, z0={z0}]")
    tail = np.linspace(z1, 0.999, 2001)
    if np.min(v_func(tail, p, K, 2)) < 0:
        problems.append("v'' < 0 to the right of z1")
    if problems:
        raise Z1NotFound(f"tangency check failed at z1={z1}: " + "; ".join(problems))


def constants_from_series(series: SeriesSolution) -> ConstantsBundle:
    params = series.params
    z0 = find_z0(series)
    if z0 is None:
        return ConstantsBundle(params, None, math.inf, None, None, None, None,
                               "no-finite-constant")
    gp = evaluate(series, z0, 1)
    C = compute_C(params, z0)
    s1 = compute_s1(params, z0)
    c_upper = tangency_formula(params.p, z0, gp)
    if params.p >= 1:
        c, z1, cands = c_upper, z0, (z0,)
    else:
        rm = _ratio_infimum(series, z0)
        c, z1, cands = rm.c, rm.argmin, rm.candidates
        _validate_tangency(series, z0, c, z1)
    status = "near-critical" if z0 > NEAR_CRITICAL else "ok"
    return ConstantsBundle(params, z0, C, c, s1, z1, gp, status, c_upper, tuple(cands))


def solve(params: Params, schedule=S_MAX_SCHEDULE, tail_tol: float = 1e-15):
    """Build the series and constants, widening s_max until z0 is bracketed.

    Returns ``(series, bundle)``.
    """
    last = None
    for s_max in schedule:
        try:
            series = build_series(params, tail_tol=tail_tol, s_max=s_max)
        except SeriesBudgetExceeded as exc:
            last = exc
            break
        try:
            return series, constants_from_series(series)
        except RootBeyondRange as exc:
            last = exc
    raise last


# -- lemma suite ----------------------------------------------------------------

def certify_lemmas(series: SeriesSolution, bundle: ConstantsBundle,
                   grid_n: int = 2001, tol: float = 1e-9) -> list[GridReport]:
    """Check the sign and majorisation properties of g on (-1, z0]."""
    params = series.params
    p, d = params.p, params.d
    z0, c, K = bundle.z0, bundle.c, bundle.K
    s = np.linspace(-1 + 1e-6, z0, grid_n)
    g0, g1, g2 = (evaluate(series, s, k) for k in (0, 1, 2))
    sc = 1 + np.abs(g0) + np.abs(g1) + np.abs(g2)
    out = []

    out.append(margin_report("lem1_i", params, s, g1 / sc, tol, strict=True))
    out.append(margin_report("lem1_ii", params, s, (2 - p) * g2 / sc, tol))
    if p == 2:
        m3 = -abs(z0)
        ok3 = abs(z0) <= 1e-12
    else:
        m3 = math.copysign(1.0, 2 - p) * z0
        ok3 = m3 > 0
    out.append(GridReport("lem1_iii", p, d, 1, tol, m3,
                          {"x": 1 - z0, "y": 1 + z0, "s": z0, "region": "boundary"}, ok3))

    # majorisation on [-1, z0] including both endpoints
    sm = np.linspace(-1.0, z0, grid_n)
    gm = evaluate(series, sm, 0)
    scm = local_scale(series, sm)
    vm = v_func(sm, p, K)
    if p <= 2:
        tag = "maj<1" if p < 1 else "maj<2"
        out.append(margin_report(tag, params, sm, (c * gm - vm) / scm, tol))
    if p >= 2:
        out.append(margin_report("maj>2", params, sm, (vm - c * gm) / scm, tol))

    lhs1 = (2 - p) * (1 - s**2) * g2 - 2 * (p - 1) * (p - 2) * s * g1 + p * (p - 1) * (p - 2) * g0
    out.append(margin_report("diffin1", params, s, lhs1 / sc, tol))
    lhs2 = s * (1 - s**2) * g2 - (p + d - 2 + (d - p) * s**2) * g1 + p * (d - 1) * s * g0
    out.append(margin_report("diffin2", params, s, -lhs2 / sc, tol))
    if p <= 2:
        out.append(margin_report("diffin3", params, s, (p * g0 + (1 - s) * g1) / sc, tol))
    if p >= 2:
        out.append(margin_report("diffin4", params, s, -(p * g0 - (1 + s) * g1) / sc, tol))

    out.append(tangency_report(series, bundle, tol))
    return out


def tangency_report(series, bundle, tol) -> GridReport:
    """Both matching conditions at z1, plus v'' >= 0 right of z1 when p < 1."""
    params = series.params
    p, z0, z1, c, K = params.p, bundle.z0, bundle.z1, bundle.c, bundle.K
    sc = float(local_scale(series, z1))
    m0 = abs(c * evaluate(series, z1, 0) - v_func(z1, p, K)) / sc
    m1 = abs(c * evaluate(series, z1, 1) - v_func(z1, p, K, 1)) / sc
    # express both as margins against their own thresholds, scaled to tol
    margin = min(1e-10 - m0, 1e-8 - m1) * (tol / 1e-10)
    ok = m0 <= 1e-10 and m1 <= 1e-8
    note = f"|cg-v|/scale={m0:.2e}, |cg'-v'|/scale={m1:.2e}"
    if p < 1:
        tail = np.linspace(z1, 0.999, 2001)
        v2 = float(np.min(v_func(tail, p, K, 2)))
        s1 = bundle.s1
        ok = ok and v2 >= 0 and (s1 is None or s1 < z1 <= z0)
        note += f", min v''(s>=z1)={v2:.3e}, s1={s1:.6g}"
    region = "boundary"
    return GridReport("match", p, params.d, 1, tol, margin,
                      {"x": 1 - z1, "y": 1 + z1, "s": z1, "region": region}, ok, note)


def residual_report(series: SeriesSolution, n: int = 1001, tol: float = 1e-8) -> GridReport:
    s = np.linspace(-1 + 1e-6, series.s_max_certified, n)
    r = ode_residual(series, s)
    return margin_report("ode_residual", series.params, s, -np.abs(r), tol)


def reflection_report(series: SeriesSolution, n: int = 1001, tol: float = 1e-8) -> GridReport:
    """At d = 2 the map s -> g(-s) solves the same equation."""
    p, d = series.params.p, series.params.d
    s = np.linspace(-series.s_max_certified, 1 - 1e-6, n)
    h0 = evaluate(series, -s, 0)
    h1 = -evaluate(series, -s, 1)
    h2 = evaluate(series, -s, 2)
    raw = (1 - s**2) * h2 - 2 * (d - 1) * s * h1 + p * (d - 1) * h0
    r = raw / (1 + np.abs(h0) + np.abs(h1) + np.abs(h2))
    return margin_report("reflection", series.params, s, -np.abs(r), tol)
