"""One-call verification suite used by the CLI and the acceptance tests."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .burkfun import BurkholderFamily, certify_inequalities
from .constants import certify_lemmas, reflection_report, residual_report, solve
from .report import GridReport, margin_report
from .specfun import Params, SeriesSolution, evaluate, rk4_crosscheck

RK4_POINTS = (-0.5, 0.0, 0.5)
RK4_TOL = 1e-6


def rk4_report(series: SeriesSolution, points=RK4_POINTS, tol: float = RK4_TOL,
               steps: int = 4000) -> GridReport:
    """Series against an independent RK4 integration, relative to max(1, |g|)."""
    pts = [s for s in points if s <= series.s_max_certified]
    g_series = evaluate(series, np.array(pts), 0)
    g_rk = np.array([rk4_crosscheck(series.params, s, steps, series) for s in pts])
    rel = np.abs(g_series - g_rk) / np.maximum(1.0, np.abs(g_series))
    return margin_report("rk4", series.params, np.array(pts), -rel, tol)


def run_suite(params: Params, grid_n: int = 2001, tol: float = 1e-9,
              checks: Optional[Iterable[str]] = None) -> list[GridReport]:
    """Residual and RK4 checks on g, the lemma suite, and the inequalities for U.

    ``checks`` optionally filters by check id (prefix match, so ``lem1``
    selects all three lemma items).
    """
    series, bundle = solve(params)
    reports = [residual_report(series), rk4_report(series)]
    if params.d == 2:
        reports.append(reflection_report(series))
    if bundle.finite:
        reports += certify_lemmas(series, bundle, grid_n, tol)
        reports += certify_inequalities(BurkholderFamily(bundle, series), grid_n, tol)
    if checks:
        wanted = tuple(checks)
        reports = [r for r in reports if r.check_id.startswith(wanted)]
    return reports
