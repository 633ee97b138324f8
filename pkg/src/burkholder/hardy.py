"""Hardy-space illustration: analytic pairs on the unit disc with |F2'| <= |F1'|."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .constants import solve
from .errors import InvalidParams, UnknownPair
from .specfun import Params

DEFAULT_RADII = (0.5, 0.9, 0.99, 0.999, 1.0)
RATIO_RTOL = 1e-12  # rounding slack for the equality case p = 2, F2 = F1


@dataclass(frozen=True)
class AnalyticPair:
    pair_id: str
    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    description: str


def _catalog(lam: complex) -> dict:
    return {
        "identity": AnalyticPair("identity", lambda z: z, lambda z: z, "F1 = F2 = z"),
        "z2half": AnalyticPair("z2half", lambda z: z, lambda z: z**2 / 2, "F1 = z, F2 = z^2/2"),
        "z3third": AnalyticPair("z3third", lambda z: z, lambda z: z**3 / 3, "F1 = z, F2 = z^3/3"),
        "scaled": AnalyticPair("scaled", lambda z: z, lambda z: lam * z, f"F1 = z, F2 = {lam}*z"),
    }


PAIR_IDS = tuple(_catalog(1.0))


def hp_norm(f, p: float, radii=DEFAULT_RADII, n_quadrature: int = 512) -> float:
    """sup over the radii of the p-mean of |f| on the circle, trapezoid rule in theta.

    Polynomials extend continuously to the closed disc and their integral
    means increase with r, so including r = 1 gives the exact supremum.
    """
    theta = 2 * np.pi * np.arange(n_quadrature) / n_quadrature
    best = 0.0
    for r in radii:
        vals = np.abs(f(r * np.exp(1j * theta))) ** p
        best = max(best, float(vals.mean()))
    return best ** (1 / p)


@dataclass
class HpReport:
    pair_id: str
    p: float
    norm_f1: float
    norm_f2: float
    ratio: float
    C_p2: float
    radii: tuple
    n_quadrature: int
    passed: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["radii"] = list(self.radii)
        out["pass"] = out.pop("passed")
        return out

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} hp:{self.pair_id:<9} p={self.p:g} ratio={self.ratio:.12g} "
                f"C_p2={self.C_p2:.12g}")


def hp_demo(pair_id: str, p: float, radii=DEFAULT_RADII, n_quadrature: int = 512,
            lam: complex = 1.0, C_p2: Optional[float] = None) -> HpReport:
    if abs(lam) > 1:
        raise InvalidParams("|lambda| must be <= 1 for the pair to be subordinate")
    catalog = _catalog(lam)
    if pair_id not in catalog:
        raise UnknownPair(f"unknown pair {pair_id!r}; choose from {sorted(catalog)}")
    if not (0 < min(radii) and max(radii) <= 1):
        raise InvalidParams("radii must lie in (0, 1]")
    if C_p2 is None:
        C_p2 = solve(Params(p, 2.0))[1].C_pd
    pair = catalog[pair_id]
    n1 = hp_norm(pair.f1, p, radii, n_quadrature)
    n2 = hp_norm(pair.f2, p, radii, n_quadrature)
    ratio = n2 / n1
    return HpReport(pair_id, p, n1, n2, ratio, float(C_p2), tuple(radii), n_quadrature,
                    bool(ratio <= C_p2 * (1 + RATIO_RTOL)))
