"""Empirical law of periodic exponents and its distance to the normal law."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateRange, DegenerateSigma, EmptyDistribution

SIGMA_FLOOR = 1e-9


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample of exponents (or of normalized exponents) for period n."""

    values: np.ndarray
    period: int
    degree: int = 2
    normalized: bool = False

    @classmethod
    def from_values(cls, values, period, degree=2, normalized=False):
        v = np.sort(np.asarray(values, dtype=float), kind="stable")
        v.setflags(write=False)
        return cls(v, int(period), int(degree), normalized)

    @property
    def count(self) -> int:
        return self.values.size

    def mean(self) -> float:
        _nonempty(self)
        return math.fsum(self.values) / self.count

    def variance(self) -> float:
        """Population variance, two-pass with exactly rounded sums."""
        mu = self.mean()
        return math.fsum((self.values - mu) ** 2) / self.count


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray


def _nonempty(dist):
    if dist.count == 0:
        raise EmptyDistribution("distribution has no values")


def streaming_variance(values) -> tuple[float, float]:
    """Welford's one-pass mean and population variance.

    The data is shifted by its first element, which leaves the variance
    unchanged and keeps the running sums small.
    """
    it = iter(np.asarray(values, dtype=float).tolist())
    try:
        shift = next(it)
    except StopIteration:
        raise EmptyDistribution("no values") from None
    count, mean, m2 = 1, 0.0, 0.0
    for v in it:
        count += 1
        d = (v - shift) - mean
        mean += d / count
        m2 += d * ((v - shift) - mean)
    return mean + shift, m2 / count


def interval_probability(dist: EmpiricalDistribution, a: float, b: float,
                         left_open: bool = False) -> float:
    """Fraction of values in [a, b] (or (a, b] with ``left_open``); exact counting."""
    _nonempty(dist)
    if a > b:
        raise ValueError("need a <= b")
    v = dist.values
    lo = np.searchsorted(v, a, side="right" if left_open else "left")
    hi = np.searchsorted(v, b, side="right")
    return (hi - lo) / dist.count


def normalize(dist: EmpiricalDistribution, chi_bar: float, sigma: float) -> EmpiricalDistribution:
    """Map each exponent v to (v - chi_bar) sqrt(n) / sigma."""
    if not sigma > SIGMA_FLOOR:
        raise DegenerateSigma(f"sigma = {sigma!r} is degenerate; the map is conjugate to linear")
    scale = math.sqrt(dist.period) / sigma
    return EmpiricalDistribution((dist.values - chi_bar) * scale, dist.period, dist.degree, True)


def denormalize(dist: EmpiricalDistribution, chi_bar: float, sigma: float) -> EmpiricalDistribution:
    scale = sigma / math.sqrt(dist.period)
    return EmpiricalDistribution(dist.values * scale + chi_bar, dist.period, dist.degree, False)


def normal_cdf(x):
    """Standard normal distribution function."""
    return ndtr(x)


def ks_distance(normalized: EmpiricalDistribution) -> float:
    """Exact sup distance between the empirical step CDF and the standard normal CDF."""
    _nonempty(normalized)
    v = normalized.values
    N = v.size
    phi = normal_cdf(v)
    i = np.arange(1, N + 1)
    upper = np.max(i / N - phi)
    lower = np.max(phi - (i - 1) / N)
    return float(min(1.0, max(upper, lower, 0.0)))


def characteristic_fn(normalized: EmpiricalDistribution, lam: float) -> complex:
    """Empirical characteristic function (1/N) sum exp(i lam v)."""
    _nonempty(normalized)
    if lam == 0:
        return 1.0 + 0.0j
    ang = lam * normalized.values
    N = normalized.count
    return complex(math.fsum(np.cos(ang)) / N, math.fsum(np.sin(ang)) / N)


def histogram(dist: EmpiricalDistribution, bins: int = 100) -> Histogram:
    """Equal-width bins over [min, max]; right-open except the last bin."""
    _nonempty(dist)
    lo, hi = float(dist.values[0]), float(dist.values[-1])
    if not hi > lo:
        raise DegenerateRange("all values are equal; equal-width bins are undefined")
    counts, edges = np.histogram(dist.values, bins=bins, range=(lo, hi))
    return Histogram(edges, counts)


def smoothed_unimodal(counts, window: int = 5, slack: int = 2) -> bool:
    """Unimodality of the moving-averaged counts, ignoring ``slack`` bins around the mode.

    The smoothed sequence must be non-decreasing up to index i* - slack and
    non-increasing from i* + slack on, where i* is its (first) maximum.
    """
    c = np.asarray(counts, dtype=float)
    s = np.convolve(c, np.ones(window), mode="same")  # the 1/window factor does not affect order
    peak = int(np.argmax(s))
    left = s[: max(peak - slack, 0) + 1]
    right = s[min(peak + slack, s.size - 1):]
    return bool(np.all(np.diff(left) >= 0) and np.all(np.diff(right) <= 0))


def loglog_slope(ns, values) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
