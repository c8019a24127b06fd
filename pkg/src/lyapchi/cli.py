"""Command line entry point: ``lyapchi {enumerate,spectrum,clt,histogram}``.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 degenerate map.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from dataclasses import dataclass

from . import circle_map, periodic_points, spectral, stats
from .clt import clt_study
from .errors import (CapExceeded, ConvergenceFailure, DegenerateRange, DegenerateSigma, DegenerateVariance,
                     LyapchiError, ParameterError, ResolutionError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4


@dataclass
class RunConfig:
    map_id: str
    periods: list
    modes: int | None
    threads: int
    cap: int
    output: str | None
    format: str


def _num(x) -> str:
    # shortest repr that round-trips
    return repr(float(x))


def _periods(text: str) -> list:
    try:
        out = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ParameterError(f"bad period list {text!r}") from None
    if not out or any(p < 1 for p in out):
        raise ParameterError("periods must be a non-empty list of integers >= 1")
    return out


def _threads(value) -> int:
    if value is None:
        value = os.environ.get("LYAPCHI_THREADS", "0")
    try:
        t = int(value)
    except ValueError:
        raise ParameterError(f"bad thread count {value!r}") from None
    if t < 0:
        raise ParameterError("thread count must be >= 0")
    return t


def _finite(x):
    return x if math.isfinite(x) else None


def _jsonable(obj):
    if isinstance(obj, float):
        return _finite(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


@contextlib.contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_enumerate(cfg: RunConfig, cmap) -> int:
    n = cfg.periods[0]
    fix = periodic_points.enumerate_fix(cmap, n, cap=cfg.cap, workers=cfg.threads)
    with _sink(cfg.output) as out:
        if cfg.format == "json":
            rows = [{"branch": int(b), "point": float(p), "exponent": float(e), "residual": float(r)}
                    for b, p, e, r in zip(fix.branch, fix.point, fix.exponent, fix.residual)]
            json.dump({"map": cmap.map_id, "period": n, "records": rows}, out)
            out.write("\n")
        else:
            out.write("branch,point,exponent,residual\n")
            out.writelines(f"{int(b)},{_num(p)},{_num(e)},{_num(r)}\n"
                           for b, p, e, r in zip(fix.branch, fix.point, fix.exponent, fix.residual))
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, cmap, twists) -> int:
    mean = spectral.mean_exponent(cmap, modes=cfg.modes)
    var = spectral.asymptotic_variance(cmap, modes=mean.modes, strict=False)
    kappa = []
    for t in twists:
        k = spectral.twisted_eigenvalue(cmap, t, modes=mean.modes)
        kappa.append({"t": t, "re": k.real, "im": k.imag})
    doc = {
        "map": cmap.map_id,
        "chi_bar": mean.chi_bar,
        "sigma_squared": var.sigma_squared,
        "degenerate_variance": var.degenerate,
        "truncation": var.truncation,
        "tail_bound": var.tail_bound,
        "modes": mean.modes,
        "kappa": kappa,
    }
    with _sink(cfg.output) as out:
        json.dump(_jsonable(doc), out, indent=2)
        out.write("\n")
    return EXIT_OK


def cmd_clt(cfg: RunConfig, cmap) -> int:
    study = clt_study(cmap, cfg.periods, cap=cfg.cap, workers=cfg.threads, modes=cfg.modes)
    ok = all(r.invariants_ok() for r in study.reports)
    with _sink(cfg.output) as out:
        json.dump(_jsonable(study.to_dict()), out, indent=2)
        out.write("\n")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_histogram(cfg: RunConfig, cmap, bins: int, normalized: bool) -> int:
    n = cfg.periods[0]
    dist = periodic_points.exponent_multiset(cmap, n, cap=cfg.cap, workers=cfg.threads)
    if normalized:
        mean = spectral.mean_exponent(cmap, modes=cfg.modes)
        var = spectral.asymptotic_variance(cmap, modes=mean.modes, strict=False)
        if var.degenerate:
            raise DegenerateSigma(f"{cmap.map_id} has degenerate variance")
        dist = stats.normalize(dist, mean.chi_bar, math.sqrt(var.sigma_squared))
    hist = stats.histogram(dist, bins)
    e, c = hist.bin_edges, hist.counts
    with _sink(cfg.output) as out:
        if cfg.format == "json":
            json.dump({"map": cmap.map_id, "period": n, "normalized": normalized,
                       "bins": [{"bin_left": float(e[i]), "bin_right": float(e[i + 1]), "count": int(c[i])}
                                for i in range(len(c))]}, out)
            out.write("\n")
        else:
            out.write("bin_left,bin_right,count\n")
            out.writelines(f"{_num(e[i])},{_num(e[i + 1])},{int(c[i])}\n" for i in range(len(c)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", required=True, help="linear:K, trigdoubling:eps or blaschke:a")
    common.add_argument("--threads", default=None, help="worker count, 0 = auto (env LYAPCHI_THREADS)")
    common.add_argument("--cap", type=int, default=periodic_points.DEFAULT_CAP,
                        help="largest allowed number of periodic points")
    common.add_argument("--modes", type=int, default=None, help="Fourier modes N (default adaptive from 64)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    p = argparse.ArgumentParser(prog="lyapchi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", parents=[common], help="dump Fix(f^n) as CSV")
    e.add_argument("--period", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="transfer-operator CLT parameters as JSON")
    s.add_argument("--twist", type=float, action="append", default=None,
                   help="twist t for kappa(t); repeatable (default 0.02 and -0.02)")

    c = sub.add_parser("clt", aliases=["clt-check"], parents=[common], help="CLT reports as JSON")
    c.add_argument("--periods", "--period", dest="periods", required=True)

    h = sub.add_parser("histogram", parents=[common], help="equal-width histogram of exponents as CSV")
    h.add_argument("--period", required=True)
    h.add_argument("--bins", type=int, default=100)
    h.add_argument("--normalized", action="store_true", help="bin (chi - chi_bar) sqrt(n) / sigma")
    return p


def _config(args) -> RunConfig:
    command = "clt" if args.command == "clt-check" else args.command
    periods = [] if command == "spectrum" else _periods(args.periods if command == "clt" else args.period)
    if command in ("enumerate", "histogram") and len(periods) != 1:
        raise ParameterError("--period takes a single value")
    fmt = args.format or ("csv" if command in ("enumerate", "histogram") else "json")
    if command in ("spectrum", "clt") and fmt != "json":
        raise ParameterError(f"{command} only supports --format json")
    if args.modes is not None and not 8 <= args.modes <= spectral.MAX_MODES:
        raise ParameterError(f"--modes must be in [8, {spectral.MAX_MODES}]")
    if args.cap < 1:
        raise ParameterError("--cap must be positive")
    return RunConfig(args.map, periods, args.modes,
                     _threads(args.threads), args.cap, args.out, fmt)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        cmap = circle_map.from_id(cfg.map_id)
        for n in cfg.periods:
            periodic_points.check_cap(cmap, n, cfg.cap)
        if args.command == "enumerate":
            return cmd_enumerate(cfg, cmap)
        if args.command == "spectrum":
            twists = args.twist if args.twist else [0.02, -0.02]
            for t in twists:
                if abs(t) > 0.5:
                    raise ParameterError("twist must satisfy |t| <= 0.5")
            return cmd_spectrum(cfg, cmap, twists)
        if args.command == "histogram":
            if args.bins < 1:
                raise ParameterError("--bins must be positive")
            return cmd_histogram(cfg, cmap, args.bins, args.normalized)
        return cmd_clt(cfg, cmap)
    except (ParameterError, CapExceeded) as exc:
        print(f"lyapchi: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateSigma, DegenerateVariance, DegenerateRange) as exc:
        print(f"lyapchi: degenerate map: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConvergenceFailure, ResolutionError) as exc:
        print(f"lyapchi: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LyapchiError as exc:
        print(f"lyapchi: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
