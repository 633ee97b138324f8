"""Monte Carlo for two Bessel processes driven by one Brownian motion,

    dR = dB + (d-1)/(2R) dt,    dS = -dB + (d-1)/(2S) dt,

stopped when S first reaches the ray S = rho_a R, rho_a = (1+a)/(1-a).

Each path draws its normals from its own Philox counter stream, and each
path is advanced by a compiled kernel that knows nothing about other paths.
Worker threads only decide which kernel call handles which fixed block of
path indices, so every per-path output, and therefore every reduction, is
bit-identical for any thread count.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .burkfun import BurkholderFamily, eval_W
from .errors import InvalidParams
from .rng import normal_block, stream_key
from .specfun import Params

SCHEMES = {"euler_reflect": 0, "euler_squared": 1}
N_BATCHES = 100
CHUNK = 2048
DIP_TOL = 1e-9

STOPPED, HORIZON, DIVERGED, PHASE1_HORIZON = 0, 1, 2, 3
STATUS_NAMES = {STOPPED: "stopped", HORIZON: "horizon", DIVERGED: "diverged",
                PHASE1_HORIZON: "phase1-horizon"}


def ray_slope(a: float) -> float:
    return (1 + a) / (1 - a)


@dataclass(frozen=True)
class SimConfig:
    params: Params
    x0: float = 1.0
    y0: float = 1.0
    a: float = 0.5
    dt: float = 1e-4
    t_max: float = 5.0
    n_paths: int = 10_000
    seed: int = 0
    scheme: str = "euler_reflect"
    b: Optional[float] = None  # first barrier of the two-step rule
    phase1_horizon: float = 1.0

    def __post_init__(self):
        if not (self.x0 > 0 and self.y0 > 0):
            raise InvalidParams("x0 and y0 must be > 0")
        if not -1 < self.a < 1:
            raise InvalidParams(f"a must lie in (-1, 1), got {self.a}")
        if self.b is not None and not -1 < self.b < self.a:
            raise InvalidParams(f"need -1 < b < a, got b={self.b}, a={self.a}")
        if not (self.dt > 0 and self.t_max > 0):
            raise InvalidParams("dt and t_max must be > 0")
        if self.dt > 1e-3 * self.t_max * (1 + 1e-12):
            raise InvalidParams(f"dt={self.dt} exceeds 1e-3 * t_max")
        if self.n_paths < 1:
            raise InvalidParams("n_paths must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParams("seed must be a 64-bit unsigned integer")
        if self.scheme not in SCHEMES:
            raise InvalidParams(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if not self.phase1_horizon > 0:
            raise InvalidParams("phase1_horizon must be > 0")

    @property
    def rho(self) -> float:
        return ray_slope(self.a)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        return out


@dataclass
class SimResult:
    n_paths: int
    n_valid: int
    n_diverged: int
    n_stopped: int
    frac_stopped: float
    mean_tau: float
    mean_tau_se: float
    p_norm_R: float
    p_norm_R_se: float
    p_norm_S: float
    p_norm_S_se: float
    ratio: float
    ratio_se: float
    ratio_orientation: str  # "S/R" or "R/S"
    martingale_gap: Optional[float]
    martingale_gap_se: Optional[float]
    w_start: Optional[float]
    seed: int
    scheme: str
    dt: float
    t_max: float
    a: float
    rho_a: float
    b: Optional[float] = None
    n_phase1_horizon: int = 0
    boundary_convention: str = "reflect"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False,
                          default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    raise TypeError(type(o))


# -- kernel -----------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _run_block(start, stop, k0, k1, x0, y0, d, dt, t_max, scheme,
               two_phase, rho_b, h1, rho_a,
               R_out, S_out, tau_out, status_out, dip_out, minS_out):
    buf = np.empty(4)
    half = 0.5 * (d - 1.0)
    sqrt_dt = math.sqrt(dt)
    for path in range(start, stop):
        j = path - start
        R = x0
        S = y0
        t = 0.0
        dip = np.inf
        minS = S
        status = -1
        phase = 1 if two_phase else 2
        if phase == 1 and S <= rho_b * R:
            phase = 2
        if phase == 2 and S >= rho_a * R:
            status = STOPPED
        step = 0
        while status < 0:
            t_end = h1 if phase == 1 else t_max
            h = min(dt, t_end - t)
            if h <= 1e-12 * dt:
                status = PHASE1_HORIZON if phase == 1 else HORIZON
                break
            if step % 4 == 0:
                normal_block(k0, k1, path, step // 4, buf)
            dB = (sqrt_dt if h == dt else math.sqrt(h)) * buf[step % 4]
            step += 1
            if scheme == 0:
                Rn = abs(R + dB + half * h / R)
                Sn = abs(S - dB + half * h / S)
            else:
                Q = R * R + 2.0 * R * dB + d * h
                P = S * S - 2.0 * S * dB + d * h
                Rn = math.sqrt(Q) if Q > 0.0 else 0.0
                Sn = math.sqrt(P) if P > 0.0 else 0.0
            if not (math.isfinite(Rn) and math.isfinite(Sn)) or Rn == 0.0:
                status = DIVERGED
                break
            rho = rho_b if phase == 1 else rho_a
            F0 = S - rho * R
            F1 = Sn - rho * Rn
            crossed = F1 <= 0.0 if phase == 1 else F1 >= 0.0
            if crossed:
                theta = F0 / (F0 - F1)
                Rn = R + theta * (Rn - R)
                Sn = rho * Rn
                h = theta * h
            inc = (Rn + Sn) - (R + S)
            if inc < dip:
                dip = inc
            if Sn < minS:
                minS = Sn
            R = Rn
            S = Sn
            t += h
            if crossed:
                if phase == 1:
                    phase = 2
                else:
                    status = STOPPED
        R_out[j] = R
        S_out[j] = S
        tau_out[j] = t
        status_out[j] = status
        dip_out[j] = dip
        minS_out[j] = minS


def default_threads() -> int:
    return os.cpu_count() or 1


def run_paths(config: SimConfig, threads: Optional[int] = None, *,
              two_phase: bool = False) -> dict:
    """Per-path terminal states as arrays, in path-index order."""
    n = config.n_paths
    k0, k1 = stream_key(config.seed)
    out = {
        "R": np.empty(n), "S": np.empty(n), "tau": np.empty(n),
        "status": np.empty(n, dtype=np.int8), "dip": np.empty(n), "minS": np.empty(n),
    }
    rho_b = ray_slope(config.b) if two_phase else 0.0
    scheme = SCHEMES[config.scheme]
    p = config.params

    def work(lo):
        hi = min(lo + CHUNK, n)
        _run_block(lo, hi, k0, k1, float(config.x0), float(config.y0), p.d,
                   float(config.dt), float(config.t_max), scheme, two_phase, rho_b,
                   float(config.phase1_horizon), config.rho,
                   out["R"][lo:hi], out["S"][lo:hi], out["tau"][lo:hi],
                   out["status"][lo:hi], out["dip"][lo:hi], out["minS"][lo:hi])

    starts = range(0, n, CHUNK)
    threads = threads or default_threads()
    if threads <= 1:
        for lo in starts:
            work(lo)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    return out


# -- reductions ----------------------------------------------------------------------

def _batch_means(*cols):
    """Batch means (fixed index order) of each column; shape (n_batches, ncols)."""
    n = cols[0].size
    k = min(N_BATCHES, n)
    edges = np.linspace(0, n, k + 1).astype(int)
    return np.array([[c[edges[i]:edges[i + 1]].mean() for c in cols] for i in range(k)])


def _mean_se(x):
    bm = _batch_means(x)[:, 0]
    if bm.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(bm.std(ddof=1) / math.sqrt(bm.size))


def _pnorms(p, num, den):
    """(||num||_p, se, ||den||_p, se, ratio, ratio_se) from per-path values."""
    mn, md = float(np.mean(num**p)), float(np.mean(den**p))
    bm = _batch_means(num**p, den**p)
    k = bm.shape[0]
    if k >= 2:
        cov = np.cov(bm.T, ddof=1) / k
    else:
        cov = np.full((2, 2), math.nan)
    norm_n, norm_d = mn ** (1 / p), md ** (1 / p)
    se_n = norm_n / (p * mn) * math.sqrt(cov[0, 0])
    se_d = norm_d / (p * md) * math.sqrt(cov[1, 1])
    ratio = (mn / md) ** (1 / p)
    rel2 = cov[0, 0] / mn**2 + cov[1, 1] / md**2 - 2 * cov[0, 1] / (mn * md)
    ratio_se = ratio / p * math.sqrt(max(rel2, 0.0))
    return norm_n, se_n, norm_d, se_d, ratio, ratio_se


def _summarise(config: SimConfig, paths: dict, family: Optional[BurkholderFamily],
               orientation: str) -> SimResult:
    p = config.params.p
    status = paths["status"]
    valid = status != DIVERGED
    R, S, tau = paths["R"][valid], paths["S"][valid], paths["tau"][valid]
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise InvalidParams("every path diverged")
    n_stopped = int(np.sum(status == STOPPED))
    mean_tau, tau_se = _mean_se(tau)
    nS, nS_se, nR, nR_se, ratio, ratio_se = _pnorms(p, S, R)
    if orientation == "R/S":
        ratio, ratio_se = _pnorms(p, R, S)[4:]
    gap = gap_se = w0 = None
    if family is not None:
        w0 = eval_W(family.series, config.x0, config.y0)
        Wv = eval_W(family.series, R, S)
        m, se = _mean_se(Wv)
        gap, gap_se = m - w0, se
    return SimResult(
        n_paths=config.n_paths, n_valid=n_valid, n_diverged=config.n_paths - n_valid,
        n_stopped=n_stopped, frac_stopped=n_stopped / n_valid,
        mean_tau=mean_tau, mean_tau_se=tau_se,
        p_norm_R=nR, p_norm_R_se=nR_se, p_norm_S=nS, p_norm_S_se=nS_se,
        ratio=ratio, ratio_se=ratio_se, ratio_orientation=orientation,
        martingale_gap=gap, martingale_gap_se=gap_se, w_start=w0,
        seed=config.seed, scheme=config.scheme, dt=config.dt, t_max=config.t_max,
        a=config.a, rho_a=config.rho, b=config.b,
        n_phase1_horizon=int(np.sum(status == PHASE1_HORIZON)),
        boundary_convention="reflect" if config.scheme == "euler_reflect" else "clamp-squared",
    )


# -- experiments ---------------------------------------------------------------------

def simulate_pair(config: SimConfig, family: Optional[BurkholderFamily] = None,
                  threads: Optional[int] = None) -> SimResult:
    """Run (R, S) until tau^a or t_max and summarise moments and W-martingale gap."""
    if family is not None and config.a >= family.bundle.z0:
        warnings.warn(f"a={config.a} >= z0={family.bundle.z0}: tau^a need not be "
                      "p/2-integrable; norms may not converge as t_max grows",
                      stacklevel=2)
    paths = run_paths(config, threads)
    return _summarise(config, paths, family, "S/R")


def two_step_experiment(params: Params, family: BurkholderFamily, b: float, a: float,
                        config: SimConfig, threads: Optional[int] = None) -> SimResult:
    """Lower-bound construction for p > 2.

    Phase one runs until S first drops to the ray S = rho_b R; if that has not
    happened by ``phase1_horizon`` the path stops there.  Otherwise phase two
    runs until S climbs back to S = rho_a R (or t_max).  The reported ratio
    is ||R_tau||_p / ||S_tau||_p, which tends to C_{p,d} as a increases to z0.
    """
    if params.p <= 2:
        raise InvalidParams("the two-step construction is for p > 2")
    if not -1 < b < a < family.bundle.z0:
        raise InvalidParams(f"need -1 < b < a < z0={family.bundle.z0}")
    cfg = SimConfig(params, config.x0, config.y0, a, config.dt, config.t_max,
                    config.n_paths, config.seed, config.scheme, b, config.phase1_horizon)
    paths = run_paths(cfg, threads, two_phase=True)
    return _summarise(cfg, paths, None, "R/S")


def path_monotonicity_check(config: SimConfig, threads: Optional[int] = None) -> dict:
    """R + S must be nondecreasing along every path (up to rounding dips)."""
    paths = run_paths(config, threads, two_phase=config.b is not None)
    dip = paths["dip"]
    scale = paths["R"] + paths["S"]
    rel = np.where(np.isfinite(dip), dip / scale, 0.0)
    violations = int(np.sum(rel < -DIP_TOL))
    return {
        "n_paths": config.n_paths,
        "violations": violations,
        "worst_relative_dip": float(rel.min()),
        "min_S": float(paths["minS"].min()),
        "frac_near_zero_S": float(np.mean(paths["minS"] < 1e-6)),
        "scheme": config.scheme,
        "pass": violations == 0,
    }
