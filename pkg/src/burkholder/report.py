from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class GridReport:
    """Outcome of one inequality check over one grid.

    ``worst_margin`` is signed so that positive means satisfied; it is already
    divided by the local scale at the worst point.
    """

    check_id: str
    p: float
    d: float
    grid_n: int
    tol: float
    worst_margin: float
    worst_point: dict
    passed: bool
    note: Optional[str] = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "check_id": self.check_id,
            "p": self.p,
            "d": self.d,
            "grid_n": self.grid_n,
            "tol": self.tol,
            "worst_margin": _finite_or_none(self.worst_margin),
            "worst_point": {k: _finite_or_none(v) if isinstance(v, float) else v
                            for k, v in self.worst_point.items()},
            "pass": bool(self.passed),
        }
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.check_id:<14} p={self.p:g} d={self.d:g} "
                f"worst_margin={self.worst_margin:+.3e} tol={self.tol:g}")


def _finite_or_none(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def section_point(s: float, region: str = "inner") -> dict:
    """Point on the homogeneity section x + y = 2 with (y - x)/(x + y) = s."""
    return {"x": float(1.0 - s), "y": float(1.0 + s), "s": float(s), "region": region}


def margin_report(check_id, params, s, margins, tol, *, strict=False,
                  regions=None, note=None) -> GridReport:
    """Reduce per-point margins to a report; ties go to the lowest index."""
    margins = np.asarray(margins, dtype=float)
    s = np.asarray(s, dtype=float)
    bad = ~np.isfinite(margins)
    if bad.any():
        i = int(np.argmax(bad))
        worst = -math.inf
    else:
        i = int(np.argmin(margins))
        worst = float(margins[i])
    region = regions[i] if regions is not None else "inner"
    passed = worst > 0 if strict else worst >= -tol
    return GridReport(check_id, params.p, params.d, int(s.size), float(tol),
                      worst, section_point(s[i], region), bool(passed), note)
