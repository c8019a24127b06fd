"""Per-period comparison of the periodic exponent law with the normal law."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .circle_map import CircleMap
from .errors import DegenerateSigma
from .periodic_points import DEFAULT_CAP, exponent_multiset
from .spectral import asymptotic_variance, mean_exponent
from .stats import (characteristic_fn, interval_probability, ks_distance, loglog_slope,
                    normal_cdf, normalize)

DEFAULT_INTERVALS = ((-1.0, 1.0), (-2.0, 2.0), (0.0, math.inf), (1.0, math.inf))
DEFAULT_LAMBDAS = (0.5, 1.0, 2.0)


@dataclass
class CltParameters:
    chi_bar: float
    sigma_squared: float
    modes: int
    truncation: int
    tail_bound: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_squared)


@dataclass
class CltReport:
    period: int
    count: int
    chi_bar: float
    sigma: float
    sample_mean: float
    scaled_variance: float  # n * Var(chi_n)
    mean_error: float
    variance_error: float
    ks_distance: float
    interval_discrepancies: list = field(default_factory=list)
    char_fn_discrepancies: list = field(default_factory=list)

    def invariants_ok(self) -> bool:
        ok = 0.0 <= self.ks_distance <= 1.0 and self.mean_error >= 0 and self.variance_error >= 0
        ok &= all(d["discrepancy"] >= 0 for d in self.interval_discrepancies)
        ok &= all(d["discrepancy"] >= 0 for d in self.char_fn_discrepancies)
        return bool(ok)

    def to_dict(self) -> dict:
        return asdict(self)


def clt_parameters(cmap: CircleMap, modes: int | None = None) -> CltParameters:
    """chi_bar and sigma^2 from the transfer operator; DegenerateSigma for linear-like maps."""
    mean = mean_exponent(cmap, modes=modes)
    var = asymptotic_variance(cmap, modes=mean.modes, strict=False)
    if var.degenerate:
        raise DegenerateSigma(f"sigma^2 = {var.sigma_squared:.3g}: {cmap.map_id} is degenerate")
    return CltParameters(mean.chi_bar, var.sigma_squared, mean.modes, var.truncation, var.tail_bound)


def clt_report(cmap: CircleMap, n: int, params: CltParameters | None = None,
               cap: int = DEFAULT_CAP, workers: int | None = None,
               intervals=DEFAULT_INTERVALS, lambdas=DEFAULT_LAMBDAS,
               dist=None) -> CltReport:
    """Compare the period-n exponent law with N(chi_bar, sigma^2 / n).

    ``dist`` may carry a precomputed exponent multiset for period ``n``.
    """
    if params is None:
        params = clt_parameters(cmap)
    if dist is None:
        dist = exponent_multiset(cmap, n, cap=cap, workers=workers)
    mean = dist.mean()
    var = dist.variance()
    z = normalize(dist, params.chi_bar, params.sigma)

    inter = []
    for a, b in intervals:
        p = interval_probability(z, a, b)
        q = float(normal_cdf(b) - normal_cdf(a))
        inter.append({"a": a, "b": b, "probability": p, "normal": q, "discrepancy": abs(p - q)})
    chars = []
    for lam in lambdas:
        psi = characteristic_fn(z, lam)
        chars.append({"lambda": lam, "re": psi.real, "im": psi.imag,
                      "discrepancy": abs(psi - math.exp(-lam * lam / 2))})

    return CltReport(
        period=n,
        count=dist.count,
        chi_bar=params.chi_bar,
        sigma=params.sigma,
        sample_mean=mean,
        scaled_variance=n * var,
        mean_error=abs(mean - params.chi_bar),
        variance_error=abs(n * var - params.sigma_squared),
        ks_distance=ks_distance(z),
        interval_discrepancies=inter,
        char_fn_discrepancies=chars,
    )


@dataclass
class CltStudy:
    map_id: str
    parameters: CltParameters
    reports: list
    ks_slope: float | None

    def to_dict(self) -> dict:
        return {
            "map": self.map_id,
            "chi_bar": self.parameters.chi_bar,
            "sigma_squared": self.parameters.sigma_squared,
            "modes": self.parameters.modes,
            "ks_loglog_slope": self.ks_slope,
            "reports": [r.to_dict() for r in self.reports],
        }


def clt_study(cmap: CircleMap, periods, cap: int = DEFAULT_CAP,
              workers: int | None = None, modes: int | None = None) -> CltStudy:
    """Reports over several periods plus the log-log slope of D_n against n."""
    params = clt_parameters(cmap, modes)
    reports = [clt_report(cmap, n, params, cap=cap, workers=workers) for n in periods]
    slope = None
    if len(reports) >= 2:
        d = np.array([r.ks_distance for r in reports])
        if np.all(d > 0):
            slope = loglog_slope([r.period for r in reports], d)
    return CltStudy(cmap.map_id, params, reports, slope)
