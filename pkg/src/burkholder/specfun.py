"""Power-series solution of the hypergeometric-type ODE

    (1 - s^2) g''(s) - 2(d-1) s g'(s) + p(d-1) g(s) = 0,   g(-1) = -1,

expanded around s = -1 as g(s) = sum_n a_n (1+s)^n.

Coefficients are held internally in the scaled form b_n = a_n 2^n and summed
in w = (1+s)/2, which keeps every stored number O(n^(d-3)) instead of
underflowing past n ~ 1075.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    IntegrationDiverged,
    InvalidParams,
    OutOfRange,
    SeriesBudgetExceeded,
)

DEFAULT_TAIL_TOL = 1e-15
DEFAULT_S_MAX = 0.99
MAX_TERMS = 200_000
TERMINATION_RTOL = 1e-14
RK4_OFFSET = 1e-4


class Branch(str, Enum):
    P_LESS_1 = "pLess1"
    P_IN_1_TO_2 = "pIn1to2"
    P_EQUALS_2 = "pEquals2"
    P_GREATER_2 = "pGreater2"


@dataclass(frozen=True)
class Params:
    """Exponent ``p > 0`` and (possibly fractional) dimension ``d > 1``."""

    p: float
    d: float

    def __post_init__(self):
        p, d = self.p, self.d
        if not (isinstance(p, (int, float)) and isinstance(d, (int, float))):
            raise InvalidParams(f"p and d must be real numbers, got {p!r}, {d!r}")
        if not (math.isfinite(p) and math.isfinite(d)):
            raise InvalidParams(f"p and d must be finite, got p={p}, d={d}")
        if p <= 0:
            raise InvalidParams(f"p must be > 0, got {p}")
        if d <= 1:
            raise InvalidParams(f"d must be > 1, got {d}")
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "d", float(d))

    @property
    def supercritical(self) -> bool:
        return self.p + self.d > 2

    @property
    def branch(self) -> Branch:
        if self.p < 1:
            return Branch.P_LESS_1
        if self.p < 2:
            return Branch.P_IN_1_TO_2
        if self.p == 2:
            return Branch.P_EQUALS_2
        return Branch.P_GREATER_2

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "supercritical": self.supercritical,
            "branch": self.branch.value,
        }


def numerator_factor(n: int, p: float, d: float) -> float:
    """k(k-1) + 2(d-1)k - p(d-1) at k = n."""
    return n * (n - 1) + 2 * (d - 1) * n - p * (d - 1)


def _is_zero_factor(f: float, n: int, p: float, d: float) -> bool:
    scale = max(1.0, n * n, abs(2 * (d - 1) * n), abs(p * (d - 1)))
    return abs(f) < TERMINATION_RTOL * scale


def _ratio_envelope(n: int, d: float) -> float:
    # sup_{m >= n} |b_{m+1}/b_m|, valid once the numerator factor is positive
    return 1.0 + max(d - 2.0, 0.0) / (n + d - 1.0)


def _tail_bound(b_next: float, n: int, d: float, w: float) -> float:
    """Bound on sum_{m>n} m^2 |b_m| w^(m-2), given b_{n+1}.

    The summand dominates the m-th term of g, 2 g' and 4 g''.
    Returns inf when the geometric envelope does not contract yet.
    """
    if w <= 0.0:
        return 0.0
    q = _ratio_envelope(n, d) * w * ((n + 1) / n) ** 2
    if q >= 1.0:
        return math.inf
    m = n + 1
    return m * m * abs(b_next) * w ** (m - 2) / (1.0 - q)


@dataclass(frozen=True)
class SeriesSolution:
    params: Params
    coeffs: np.ndarray  # a_0..a_N
    n_terms: int
    polynomial_degree: Optional[int]
    s_max_certified: float
    tail_tol: float
    tail_bound: float
    scaled: np.ndarray = field(repr=False)  # b_n = a_n 2^n
    factors: np.ndarray = field(repr=False)  # numerator factors k = 0..N-1
    first_positive: int = field(repr=False, default=0)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "coeffs": [float(a) for a in self.coeffs],
            "n_terms": self.n_terms,
            "polynomial_degree": self.polynomial_degree,
            "s_max_certified": self.s_max_certified,
            "tail_tol": self.tail_tol,
            "tail_bound": self.tail_bound,
        }

    def __call__(self, s, order: int = 0):
        return evaluate(self, s, order)


def build_series(
    params: Params,
    tail_tol: float = DEFAULT_TAIL_TOL,
    s_max: float = DEFAULT_S_MAX,
    max_terms: int = MAX_TERMS,
) -> SeriesSolution:
    """Build the coefficient sequence with a certified truncation at ``s_max``.

    The number of terms N is the first index at which the ratio envelope
    bounds the remainder of g, g' and g'' below ``tail_tol`` uniformly on
    [-1, s_max].  Exact termination (a zero numerator factor) produces a
    polynomial and sets ``polynomial_degree``.
    """
    if not tail_tol > 0:
        raise InvalidParams(f"tail_tol must be > 0, got {tail_tol}")
    if not -1.0 < s_max < 1.0:
        raise InvalidParams(f"s_max must lie in (-1, 1), got {s_max}")
    p, d = params.p, params.d
    w_max = (1.0 + s_max) / 2.0

    b = [-1.0]
    factors = []
    degree = None
    tail = math.inf
    first_positive = None
    n = 0
    while True:
        f = numerator_factor(n, p, d)
        if _is_zero_factor(f, n, p, d):
            degree = n
            factors.append(0.0)
            tail = 0.0
            break
        factors.append(f)
        b.append(b[n] * f / ((n + 1) * (n + d - 1)))
        if f > 0 and first_positive is None:
            first_positive = n
        if first_positive is not None and n >= max(first_positive, 1):
            tail = _tail_bound(b[n + 1], n, d, w_max)
            if tail < tail_tol:
                b.pop()
                factors.pop()
                break
        n += 1
        if n > max_terms:
            raise SeriesBudgetExceeded(
                f"series for p={p}, d={d} needs more than {max_terms} terms to "
                f"reach tail {tail_tol:g} at s_max={s_max} (last bound {tail:.3g}); "
                "lower s_max or raise the budget"
            )

    if degree is not None:
        # pad so that the stored sequence always has N >= 2 with exact zeros
        while len(b) < 3:
            b.append(0.0)
        if first_positive is None:
            first_positive = len(b)
    n_terms = len(b) - 1
    scaled = np.array(b, dtype=float)
    idx = np.arange(n_terms + 1)
    coeffs = np.ldexp(scaled, -idx)
    for arr in (scaled, coeffs):
        arr.flags.writeable = False
    fac = np.array(factors, dtype=float)
    fac.flags.writeable = False
    return SeriesSolution(
        params=params,
        coeffs=coeffs,
        n_terms=n_terms,
        polynomial_degree=degree,
        s_max_certified=float(s_max),
        tail_tol=float(tail_tol),
        tail_bound=float(tail),
        scaled=scaled,
        factors=fac,
        first_positive=int(first_positive),
    )


def _terms_needed(series: SeriesSolution, w: float) -> int:
    """Smallest truncation index whose remainder at ``w`` is below tail_tol."""
    N = series.n_terms
    if series.polynomial_degree is not None or w <= 0.0:
        return N
    b = series.scaled
    d = series.params.d
    n = np.arange(max(series.first_positive, 1), N)
    if n.size == 0:
        return N
    q = (1.0 + max(d - 2.0, 0.0) / (n + d - 1.0)) * w * ((n + 1) / n) ** 2
    m = n + 1
    with np.errstate(divide="ignore", under="ignore"):
        log_t = 2 * np.log(m) + np.log(np.abs(b[m])) + (m - 2) * math.log(w)
        tail = np.where(q < 1.0, np.exp(log_t) / np.where(q < 1.0, 1.0 - q, 1.0), np.inf)
    ok = np.nonzero(tail < series.tail_tol)[0]
    if ok.size == 0:
        return N
    return int(n[ok[0]])


def _check_range(series: SeriesSolution, s: np.ndarray) -> None:
    if s.size == 0:
        return
    lo, hi = float(np.min(s)), float(np.max(s))
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise OutOfRange("non-finite abscissa")
    if lo < -1.0 or hi > series.s_max_certified:
        raise OutOfRange(
            f"s in [{lo}, {hi}] leaves the certified range "
            f"[-1, {series.s_max_certified}]; rebuild with a larger s_max"
        )


def evaluate(series: SeriesSolution, s, order: int = 0):
    """g, g' or g'' at ``s`` (scalar or array) by Horner's rule."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    s_arr = np.asarray(s, dtype=float)
    _check_range(series, s_arr)
    w = (1.0 + s_arr) / 2.0
    M = _terms_needed(series, float(np.max(w)) if w.size else 0.0)
    n = np.arange(M + 1, dtype=float)
    c = series.scaled[: M + 1]
    if order == 1:
        c = (c * n)[1:] / 2.0
    elif order == 2:
        c = (c * n * (n - 1))[2:] / 4.0
    acc = np.zeros_like(w)
    for coef in c[::-1]:
        acc = acc * w + coef
    if acc.ndim == 0:
        return float(acc)
    return acc


def ode_residual(series: SeriesSolution, s):
    """Scaled ODE residual: raw residual / (1 + |g| + |g'| + |g''|)."""
    p, d = series.params.p, series.params.d
    s_arr = np.asarray(s, dtype=float)
    g0 = evaluate(series, s_arr, 0)
    g1 = evaluate(series, s_arr, 1)
    g2 = evaluate(series, s_arr, 2)
    raw = (1 - s_arr**2) * g2 - 2 * (d - 1) * s_arr * g1 + p * (d - 1) * g0
    return raw / (1 + np.abs(g0) + np.abs(g1) + np.abs(g2))


def rk4_crosscheck(
    params: Params,
    s_end: float,
    steps: int = 4000,
    series: Optional[SeriesSolution] = None,
) -> float:
    """Integrate the ODE from s = -1 + 1e-4 to ``s_end`` with classic RK4.

    Initial data (g, g') come from the series.  Fixed steps are taken in
    t = log(1 + s): the regular singular point at s = -1 makes uniform steps
    in s unstable unless they are shorter than ~1e-4 / (d - 1).
    """
    s0 = -1.0 + RK4_OFFSET
    if not (s0 < s_end < 1.0):
        raise InvalidParams(f"s_end must lie in ({s0}, 1), got {s_end}")
    if steps < 1000:
        raise InvalidParams(f"steps must be >= 1000, got {steps}")
    if series is None:
        series = build_series(params, s_max=min(DEFAULT_S_MAX, 0.5 * (1 + s_end)))
    p, d = params.p, params.d
    t0, t1 = math.log1p(s0), math.log1p(s_end)
    h = (t1 - t0) / steps
    if h <= 1e-14 * max(1.0, abs(t0)):
        raise IntegrationDiverged(f"step underflow: h={h}")

    def rhs(t, y0, y1):
        u = math.exp(t)
        s = u - 1.0
        return u * y1, (2 * (d - 1) * s * y1 - p * (d - 1) * y0) / (2.0 - u)

    y0 = evaluate(series, s0, 0)
    y1 = evaluate(series, s0, 1)
    t = t0
    for _ in range(steps):
        k1a, k1b = rhs(t, y0, y1)
        k2a, k2b = rhs(t + h / 2, y0 + h / 2 * k1a, y1 + h / 2 * k1b)
        k3a, k3b = rhs(t + h / 2, y0 + h / 2 * k2a, y1 + h / 2 * k2b)
        k4a, k4b = rhs(t + h, y0 + h * k3a, y1 + h * k3b)
        y0 += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        y1 += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        t += h
        if not (math.isfinite(y0) and math.isfinite(y1)):
            raise IntegrationDiverged(f"non-finite state at s={math.expm1(t)}")
    return y0
