"""The functions W, U, V on the positive quadrant and the grid certification
of the differential inequalities U must satisfy.

All evaluators are vectorised over numpy arrays of x and y.  The inner
branch of U is c W (p <= 2) or -c C^p W(y, x) (p > 2); the outer branch is
V(x, y) = y^p - C^p x^p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import ConstantsBundle, solve
from .errors import InvalidParams
from .report import GridReport, margin_report
from .specfun import Params, SeriesSolution, evaluate

BOUNDARY_BAND = 1e-6


class Derivs(NamedTuple):
    value: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray


@dataclass(frozen=True)
class PointEval:
    region: str  # "inner" | "outer"
    value: float
    grad: tuple
    hessian: tuple  # (U_xx, U_xy, U_yy)


@dataclass(frozen=True)
class BurkholderFamily:
    bundle: ConstantsBundle
    series: SeriesSolution

    @classmethod
    def from_params(cls, params: Params) -> "BurkholderFamily":
        series, bundle = solve(params)
        if not bundle.finite:
            raise InvalidParams(f"no finite constant for p={params.p}, d={params.d}")
        return cls(bundle, series)

    @property
    def params(self) -> Params:
        return self.series.params

    @property
    def boundary_ratio(self) -> float:
        p, z0, z1 = self.params.p, self.bundle.z0, self.bundle.z1
        if p < 1:
            return (1 + z1) / (1 - z1)
        if p <= 2:
            return (1 + z0) / (1 - z0)
        return (1 - z0) / (1 + z0)

    @property
    def boundary_s(self) -> float:
        """Location of the boundary line on the section, as s = (y-x)/(x+y)."""
        r = self.boundary_ratio
        return (r - 1) / (r + 1)

    def is_inner(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if self.params.p <= 2:
            return y <= self.boundary_ratio * x
        return y >= self.boundary_ratio * x


def _check_xy(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(x <= 0) or np.any(y < 0):
        raise InvalidParams("need x > 0 and y >= 0")
    return x, y


def w_derivs(series: SeriesSolution, x, y) -> Derivs:
    """W(x, y) = (x+y)^p g((y-x)/(x+y)) with all partials up to order two."""
    p = series.params.p
    x, y = _check_xy(x, y)
    sig = x + y
    s = (y - x) / sig
    g0, g1, g2 = (evaluate(series, s, k) for k in (0, 1, 2))
    phi = p * g0 - (1 + s) * g1
    psi = p * g0 + (1 - s) * g1
    dphi = (p - 1) * g1 - (1 + s) * g2
    dpsi = (p - 1) * g1 + (1 - s) * g2
    pm1, pm2 = sig ** (p - 1), sig ** (p - 2)
    return Derivs(
        sig**p * g0,
        pm1 * phi,
        pm1 * psi,
        pm2 * ((p - 1) * phi - (1 + s) * dphi),
        pm2 * ((p - 1) * phi + (1 - s) * dphi),
        pm2 * ((p - 1) * psi + (1 - s) * dpsi),
    )


def eval_W(series: SeriesSolution, x, y):
    p = series.params.p
    x, y = _check_xy(x, y)
    sig = x + y
    out = sig**p * evaluate(series, (y - x) / sig, 0)
    return float(out) if np.ndim(out) == 0 else out


def generator_residual_W(series: SeriesSolution, x, y):
    """Drift of W(R, S) for the coupled Bessel pair, relative to the local scale."""
    p, d = series.params.p, series.params.d
    x, y = _check_xy(x, y)
    D = w_derivs(series, x, y)
    raw = ((d - 1) / (2 * x) * D.dx + (d - 1) / (2 * y) * D.dy
           + 0.5 * (D.dxx - 2 * D.dxy + D.dyy))
    s = (y - x) / (x + y)
    scale = (x + y) ** (p - 2) * (1 + sum(np.abs(evaluate(series, s, k)) for k in (0, 1, 2)))
    out = raw / scale
    return float(out) if np.ndim(out) == 0 else out


def eval_V(bundle: ConstantsBundle, x, y):
    p, C = bundle.params.p, bundle.C_pd
    out = np.asarray(y, dtype=float) ** p - C**p * np.asarray(x, dtype=float) ** p
    return float(out) if np.ndim(out) == 0 else out


def v_derivs(bundle: ConstantsBundle, x, y) -> Derivs:
    p, Cp = bundle.params.p, bundle.C_pd ** bundle.params.p
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return Derivs(
            y**p - Cp * x**p,
            -p * Cp * x ** (p - 1),
            p * y ** (p - 1),
            -p * (p - 1) * Cp * x ** (p - 2),
            np.zeros_like(x),
            p * (p - 1) * y ** (p - 2),
        )


def u_derivs(family: BurkholderFamily, x, y):
    """Value and partials of U; returns ``(Derivs, inner_mask)``."""
    p = family.params.p
    x, y = _check_xy(x, y)
    inner = family.is_inner(x, y)
    out = [np.zeros_like(x) for _ in range(6)]
    c, C = family.bundle.c, family.bundle.C_pd
    if np.any(inner):
        xi, yi = x[inner], y[inner]
        if p <= 2:
            W = w_derivs(family.series, xi, yi)
            parts = [c * t for t in W]
        else:
            # -c C^p W(y, x): swap the roles of the arguments
            W = w_derivs(family.series, yi, xi)
            k = -c * C**p
            parts = [k * W.value, k * W.dy, k * W.dx, k * W.dyy, k * W.dxy, k * W.dxx]
        for o, t in zip(out, parts):
            o[inner] = t
    outer = ~inner
    if np.any(outer):
        V = v_derivs(family.bundle, x[outer], y[outer])
        for o, t in zip(out, V):
            o[outer] = t
    return Derivs(*out), inner


def eval_U(family: BurkholderFamily, x: float, y: float) -> PointEval:
    D, inner = u_derivs(family, np.array([x], dtype=float), np.array([y], dtype=float))
    return PointEval(
        "inner" if inner[0] else "outer",
        float(D.value[0]),
        (float(D.dx[0]), float(D.dy[0])),
        (float(D.dxx[0]), float(D.dxy[0]), float(D.dyy[0])),
    )


def u_value(family: BurkholderFamily, x, y):
    D, _ = u_derivs(family, x, y)
    return D.value


def local_scale(D: Derivs, x, y):
    return (1 + np.abs(D.value) + np.abs(x * D.dx) + np.abs(y * D.dy)
            + x**2 * np.abs(D.dxx) + y**2 * np.abs(D.dyy))


CHECK_IDS = ("maj", "part1", "part1.5", "part2", "part3")


def certify_inequalities(family: BurkholderFamily, grid_n: int = 2001,
                         tol: float = 1e-9) -> list[GridReport]:
    """Check U >= V and the four second-order conditions on the section x + y = 2.

    By homogeneity the section covers the whole quadrant.  Points within
    1e-6 of the boundary line, where the second partials jump, are skipped.
    """
    if grid_n < 101:
        raise InvalidParams("grid_n must be >= 101")
    params = family.params
    d = params.d
    s_hi = min(0.999, family.series.s_max_certified)
    s = np.linspace(-1 + 1e-4, s_hi, grid_n)
    s = s[np.abs(s - family.boundary_s) >= BOUNDARY_BAND]
    x, y = 1 - s, 1 + s
    D, inner = u_derivs(family, x, y)
    scale = local_scale(D, x, y)
    regions = np.where(inner, "inner", "outer")
    Vv = eval_V(family.bundle, x, y)
    L = D.dxx + (d - 1) * D.dx / x
    R = D.dyy + (d - 1) * D.dy / y

    margins = {
        "maj": (D.value - Vv) / scale,
        "part1": -(L + R - 2 * D.dxy) / scale,
        "part1.5": -(L - R) / scale,
        "part2": -D.dxy / scale,
        "part3": np.minimum(-D.dx, D.dy) / scale,
    }
    return [margin_report(k, params, s, margins[k], tol, regions=regions)
            for k in CHECK_IDS]
