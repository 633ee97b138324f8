"""burkholder: constants tables, verification and simulations from the shell.

Exit codes: 0 ok, 1 invalid input or unwritable output, 2 no finite constant,
3 a check failed, 4 diverged Monte Carlo paths.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .burkfun import BurkholderFamily
from .constants import CSV_HEADER, ConstantsBundle, fmt17, solve
from .errors import BurkholderError, InvalidParams
from .hardy import PAIR_IDS, hp_demo
from .sde import SCHEMES, SimConfig, simulate_pair, two_step_experiment
from .specfun import Params
from .verify import run_suite

EXIT_OK, EXIT_INPUT, EXIT_NO_CONSTANT, EXIT_CHECK, EXIT_DIVERGED = 0, 1, 2, 3, 4


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    raise TypeError(type(o))


def _clean(x):
    """Replace non-finite floats by None so JSON stays strict."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_text(path: str, text: str) -> None:
    # newline="" keeps "\n" on every platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_manifest(out: str, argv, resolved: dict, seeds=()) -> str:
    outputs = [out] + list(resolved.get("extra_outputs", []))
    manifest = {
        "argv": list(argv),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "seeds": list(seeds),
        "resolved": _clean(resolved),
        "outputs": {os.path.basename(p): sha256_file(p) for p in outputs},
    }
    path = out + ".manifest.json"
    _write_text(path, _dumps(manifest))
    return path


def parse_values(tokens) -> list[float]:
    """Numbers, or ``start:stop:num`` inclusive linspace ranges."""
    out = []
    for tok in tokens:
        for part in str(tok).split(","):
            if not part:
                continue
            if ":" in part:
                a, b, n = part.split(":")
                out.extend(float(v) for v in np.linspace(float(a), float(b), int(n)))
            else:
                out.append(float(part))
    if not out:
        raise InvalidParams("empty value list")
    return out


# -- commands ---------------------------------------------------------------------

def cmd_constants(args, argv) -> int:
    series, bundle = solve(Params(args.p, args.d))
    text = _dumps(_clean(bundle.to_dict()))
    sys.stdout.write(text)
    extra = []
    if args.dump_series:
        _write_text(args.dump_series, _dumps(_clean(series.to_dict())))
        extra.append(args.dump_series)
    if args.out:
        _write_text(args.out, text)
        write_manifest(args.out, argv, {"p": args.p, "d": args.d, "extra_outputs": extra})
    return EXIT_OK if bundle.finite else EXIT_NO_CONSTANT


def _table_row(p: float, d: float):
    try:
        return solve(Params(p, d))[1]
    except BurkholderError as exc:
        return exc.code


def cmd_table(args, argv) -> int:
    ps, ds = parse_values(args.p), parse_values(args.d)
    rows = []
    for d in ds:  # d-major, p-minor
        for p in ps:
            res = _table_row(p, d)
            if isinstance(res, ConstantsBundle):
                rows.append((res.csv_row(), res.to_dict()))
            else:
                rows.append(([fmt17(p), fmt17(d), "", "", "", "", "", res],
                             {"params": {"p": p, "d": d}, "status": res}))
    if args.format == "csv":
        text = ",".join(CSV_HEADER) + "\n" + "".join(",".join(r) + "\n" for r, _ in rows)
    else:
        text = _dumps(_clean([j for _, j in rows]))
    if not args.out:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        _write_text(args.out, text)
        write_manifest(args.out, argv, {"p": ps, "d": ds, "format": args.format})
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    params = Params(args.p, args.d)
    reports = run_suite(params, args.grid_n, args.tol, args.checks)
    for r in reports:
        print(r.line())
    if args.out:
        _write_text(args.out, _dumps([r.to_dict() for r in reports]))
        write_manifest(args.out, argv, {"p": args.p, "d": args.d, "grid_n": args.grid_n,
                                        "tol": args.tol, "checks": args.checks})
    if not all(r.passed for r in reports):
        return EXIT_CHECK
    if not solve(params)[1].finite:
        return EXIT_NO_CONSTANT
    return EXIT_OK


def _emit(args, argv, text: str, resolved: dict, seeds=()) -> None:
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
        write_manifest(args.out, argv, resolved, seeds)


def _family(p, d):
    params = Params(p, d)
    series, bundle = solve(params)
    if not bundle.finite:
        return params, None
    return params, BurkholderFamily(bundle, series)


def cmd_bessel(args, argv) -> int:
    params, fam = _family(args.p, args.d)
    if fam is None:
        print(f"error: no finite constant for p={args.p}, d={args.d}", file=sys.stderr)
        return EXIT_NO_CONSTANT
    a = args.a if args.a is not None else fam.bundle.z0 - 0.05
    cfg = SimConfig(params, args.x0, args.y0, a, args.dt, args.t_max, args.paths,
                    args.seed, args.scheme)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if args.quiet else "default")
        res = simulate_pair(cfg, fam, threads=args.threads)
    _emit(args, argv, res.to_json(), cfg.to_dict(), [args.seed])
    return EXIT_DIVERGED if res.n_diverged else EXIT_OK


def cmd_twostep(args, argv) -> int:
    params, fam = _family(args.p, args.d)
    if fam is None:
        print(f"error: no finite constant for p={args.p}, d={args.d}", file=sys.stderr)
        return EXIT_NO_CONSTANT
    a = args.a if args.a is not None else fam.bundle.z0 - 0.05
    cfg = SimConfig(params, args.x0, args.y0, a, args.dt, args.t_max, args.paths,
                    args.seed, args.scheme, args.b, args.phase1_horizon)
    res = two_step_experiment(params, fam, args.b, a, cfg, threads=args.threads)
    _emit(args, argv, res.to_json(), cfg.to_dict(), [args.seed])
    return EXIT_DIVERGED if res.n_diverged else EXIT_OK


def cmd_hp(args, argv) -> int:
    rep = hp_demo(args.pair, args.p, n_quadrature=args.n_quadrature, lam=args.lam)
    _emit(args, argv, _dumps(rep.to_dict()), {"pair": args.pair, "p": args.p,
                                              "lam": args.lam,
                                              "n_quadrature": args.n_quadrature})
    return EXIT_OK if rep.passed else EXIT_CHECK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="burkholder", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    pd = argparse.ArgumentParser(add_help=False)
    pd.add_argument("--p", type=float, required=True)
    pd.add_argument("--d", type=float, required=True)
    outp = argparse.ArgumentParser(add_help=False)
    outp.add_argument("--out", help="also write the output here, plus a manifest")

    c = sub.add_parser("constants", parents=[pd, outp], help="z0, C_pd, c, s1, z1 as JSON")
    c.add_argument("--dump-series", metavar="PATH", help="write series coefficients as JSON")
    c.set_defaults(func=cmd_constants)

    t = sub.add_parser("table", parents=[outp], help="constants over a (p, d) grid")
    t.add_argument("--p", nargs="+", required=True, help="values or start:stop:num ranges")
    t.add_argument("--d", nargs="+", required=True)
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("verify", parents=[pd, outp], help="grid certification suite")
    v.add_argument("--grid-n", type=int, default=2001)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--checks", nargs="*", help="only run check ids with these prefixes")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="Monte Carlo and H_p experiments")
    ssub = s.add_subparsers(dest="experiment", required=True)
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--a", type=float, default=None, help="default z0 - 0.05")
    mc.add_argument("--x0", type=float, default=1.0)
    mc.add_argument("--y0", type=float, default=1.0)
    mc.add_argument("--paths", type=int, default=100_000)
    mc.add_argument("--dt", type=float, default=1e-4)
    mc.add_argument("--t-max", type=float, default=5.0)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--threads", type=int, default=None, help="worker threads (no effect on results)")
    mc.add_argument("--scheme", choices=sorted(SCHEMES), default="euler_reflect")

    b = ssub.add_parser("bessel", parents=[pd, outp, mc], help="stop at the ray S = rho_a R")
    b.add_argument("--quiet", action="store_true", help="suppress the a >= z0 warning")
    b.set_defaults(func=cmd_bessel)

    ts = ssub.add_parser("twostep", parents=[pd, outp, mc], help="two-phase rule for p > 2")
    ts.add_argument("--b", type=float, default=-0.5)
    ts.add_argument("--phase1-horizon", type=float, default=1.0)
    ts.set_defaults(func=cmd_twostep)

    h = ssub.add_parser("hp", parents=[outp], help="H_p norms of a catalog pair")
    h.add_argument("--pair", choices=PAIR_IDS, required=True)
    h.add_argument("--p", type=float, required=True)
    h.add_argument("--lam", type=float, default=1.0)
    h.add_argument("--n-quadrature", type=int, default=512)
    h.set_defaults(func=cmd_hp)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, argv)
    except (BurkholderError, ValueError) as exc:
        code = getattr(exc, "code", "invalid-params")
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
