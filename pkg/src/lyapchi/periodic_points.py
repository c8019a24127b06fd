"""Enumeration of Fix(f^n) and periodic Lyapunov exponents.

On [0, 1] the function G(x) = F^n(x) - x is strictly increasing with slope
(f^n)'(x) - 1 >= lambda_*^n - 1 and gains exactly K^n - 1 over the interval.
Each integer level G(0) < o + m <= G(0) + K^n - 1 (o = floor G(0),
m = 1 .. K^n - 1) is hit exactly once, and the solutions are the periodic
points. The level index m is the branch index.

F^n is evaluated by reducing mod 1 after every step and carrying the integer
part separately, so the fractional part keeps full precision. Derivatives of
f^n are carried as sums of ln f' to avoid overflow.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .circle_map import CircleMap, log_derivative
from .errors import CapExceeded, ConvergenceFailure, ParameterError
from .stats import EmpiricalDistribution

DEFAULT_CAP = 2**26
ROOT_TOL = 1e-12
MAX_NEWTON = 200
BLOCK = 1 << 15  # fixed work unit; results never depend on the worker count
_STEP_TOL = 1e-14


@dataclass(frozen=True)
class BranchIndex:
    m: int
    period: int


@dataclass(frozen=True)
class PeriodicPointRecord:
    point: float
    period: int
    branch: BranchIndex
    exponent: float
    residual: float


def forward(cmap: CircleMap, x, n: int):
    """Iterate the lift n times from ``x`` in [0, 1].

    Returns ``(whole, frac, logsum)`` with F^n(x) = whole + frac, frac in [0, 1)
    and logsum = sum_{k<n} ln f'(f^k x).
    """
    y = np.array(x, dtype=float, copy=True)
    whole = np.zeros_like(y)
    logsum = np.zeros_like(y)
    K = float(cmap.degree)
    F, d1 = cmap.lift, cmap.derivative
    for _ in range(n):
        logsum += np.log(d1(y))
        v = F(y)
        fl = np.floor(v)
        y = v - fl
        whole = K * whole + fl
    return whole, y, logsum


def _offset(cmap: CircleMap, n: int) -> tuple[int, float]:
    whole, frac, _ = forward(cmap, np.array([0.0]), n)
    g0 = float(whole[0] + frac[0])
    return int(math.floor(g0)), g0


def check_cap(cmap: CircleMap, n: int, cap: int = DEFAULT_CAP) -> int:
    """Number of periodic points K^n - 1; raises CapExceeded above ``cap``."""
    if n < 1:
        raise ParameterError(f"period must be >= 1, got {n}")
    count = cmap.degree**n - 1
    if count > cap:
        raise CapExceeded(f"{cmap.degree}^{n} - 1 = {count} periodic points exceeds cap {cap}")
    return count


def _newton(cmap, n, levels, lo, hi, x):
    """Bracketed Newton for G(x) = level on [lo, hi], bisection when a step leaves the bracket.

    Every entry evolves independently of the others.
    """
    levels = np.asarray(levels, dtype=float)
    lo, hi, x = lo.copy(), hi.copy(), x.copy()
    active = np.arange(x.size)
    for _ in range(MAX_NEWTON):
        if active.size == 0:
            return x
        xa, la = x[active], levels[active]
        whole, frac, logsum = forward(cmap, xa, n)
        r = ((whole - la) + frac) - xa
        slope = np.expm1(logsum)
        lo_a = np.where(r <= 0.0, xa, lo[active])
        hi_a = np.where(r >= 0.0, xa, hi[active])
        xn = xa - r / slope
        outside = ~((xn >= lo_a) & (xn <= hi_a))
        xn = np.where(outside, 0.5 * (lo_a + hi_a), xn)
        done = (r == 0.0) | (np.abs(xn - xa) <= _STEP_TOL) | (hi_a - lo_a <= _STEP_TOL)
        xn = np.where(r == 0.0, xa, xn)
        lo[active], hi[active], x[active] = lo_a, hi_a, xn
        active = active[~done]
    raise ConvergenceFailure(f"bracketed Newton did not converge for {active.size} branches at period {n}")


def _finish(cmap, n, levels, x):
    whole, frac, logsum = forward(cmap, x, n)
    r = ((whole - levels) + frac) - x
    residual = np.abs(r) / np.expm1(logsum)
    if np.any(residual > ROOT_TOL):
        raise ConvergenceFailure(f"root residual {residual.max():.3g} above {ROOT_TOL}")
    return residual, logsum / n


def _level_bracket(cmap, n, level, g0):
    """A bracket from the certified bounds on G'."""
    lam, big = cmap.lambda_star, cmap.max_derivative
    d = level - g0
    lo = d / math.expm1(n * math.log(big))
    hi = d / math.expm1(n * math.log(lam))
    return max(0.0, min(lo, 1.0)), min(1.0, hi)


def solve_branch(cmap: CircleMap, n: int, m: int) -> PeriodicPointRecord:
    """The unique x in (0, 1] with F^n(x) = x + floor(F^n(0)) + m, reported mod 1."""
    count = cmap.degree**n - 1
    if not 1 <= m <= count:
        raise ParameterError(f"branch index must be in [1, {count}], got {m}")
    o, g0 = _offset(cmap, n)
    level = float(o + m)
    if m == count and g0 == o:
        # the level is hit at x = 1, which is the point 0 on the circle
        level, x = float(o), np.array([0.0])
    else:
        lo, hi = _level_bracket(cmap, n, level, g0)
        x0 = np.array([0.5 * (lo + hi)])
        x = _newton(cmap, n, np.array([level]), np.array([lo]), np.array([hi]), x0)
    residual, expo = _finish(cmap, n, np.array([level]), x)
    point = float(x[0]) % 1.0
    return PeriodicPointRecord(point, n, BranchIndex(m, n), float(expo[0]), float(residual[0]))


@dataclass(frozen=True)
class FixedPointSet:
    """All K^n - 1 points of Fix(f^n), as parallel arrays sorted by point."""

    period: int
    degree: int
    branch: np.ndarray
    point: np.ndarray
    exponent: np.ndarray
    residual: np.ndarray

    def __len__(self) -> int:
        return self.point.size

    def __getitem__(self, i) -> PeriodicPointRecord:
        return PeriodicPointRecord(float(self.point[i]), self.period,
                                   BranchIndex(int(self.branch[i]), self.period),
                                   float(self.exponent[i]), float(self.residual[i]))

    def __iter__(self) -> Iterator[PeriodicPointRecord]:
        return (self[i] for i in range(len(self)))


def _resolve_workers(workers):
    if workers is None or workers == 0:
        env = os.environ.get("LYAPCHI_THREADS")
        workers = int(env) if env and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, int(workers))


def _run_blocks(fn, nblocks, workers):
    if workers == 1 or nblocks == 1:
        for b in range(nblocks):
            fn(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for _ in pool.map(fn, range(nblocks)):
            pass


def enumerate_fix(cmap: CircleMap, n: int, cap: int = DEFAULT_CAP,
                  workers: int | None = None) -> FixedPointSet:
    """Every point of Fix(f^n) with its exponent (1/n) ln (f^n)'.

    A pre-scan samples G on a uniform grid with about two samples per branch;
    because G is monotone the grid cell containing each level is a valid
    bracket for the Newton solve. Work is split into fixed-size blocks written
    into preallocated arrays, so the output is bitwise independent of
    ``workers``.
    """
    count = check_cap(cmap, n, cap)
    workers = _resolve_workers(workers)
    o, g0 = _offset(cmap, n)

    M = max(64, 2 * count)
    grid_vals = np.empty(M + 1)

    def scan(b):
        j = np.arange(b * BLOCK, min((b + 1) * BLOCK, M + 1))
        xj = j / M
        whole, frac, _ = forward(cmap, xj, n)
        grid_vals[j] = (whole - o + frac) - xj  # G(x) - o, exact integer part removed

    _run_blocks(scan, -(-(M + 1) // BLOCK), workers)

    m = np.arange(1, count + 1, dtype=np.int64)
    levels = (o + m).astype(float)
    wrapped = g0 == o
    solve_m = m[:-1] if wrapped else m
    rel = solve_m.astype(float)
    idx = np.clip(np.searchsorted(grid_vals, rel, side="left"), 1, M)

    x = np.empty(count)
    if wrapped:
        x[-1] = 0.0
        levels[-1] = float(o)

    def solve(b):
        s = slice(b * BLOCK, min((b + 1) * BLOCK, solve_m.size))
        i = idx[s]
        lo = (i - 1) / M
        hi = i / M
        ga, gb = grid_vals[i - 1], grid_vals[i]
        t = np.clip((rel[s] - ga) / (gb - ga), 0.0, 1.0)
        x0 = lo + t * (hi - lo)
        x[s] = _newton(cmap, n, levels[s], lo, hi, x0)

    _run_blocks(solve, max(1, -(-solve_m.size // BLOCK)), workers)

    residual = np.empty(count)
    exponent = np.empty(count)

    def finish(b):
        s = slice(b * BLOCK, min((b + 1) * BLOCK, count))
        residual[s], exponent[s] = _finish(cmap, n, levels[s], x[s])

    _run_blocks(finish, -(-count // BLOCK), workers)

    point = np.where(x >= 1.0, x - 1.0, x)
    order = np.argsort(point, kind="stable")
    return FixedPointSet(n, cmap.degree, m[order], point[order], exponent[order], residual[order])


def birkhoff_average(cmap: CircleMap, g, x, n: int):
    """(1/n) sum_{k<n} g(f^k x), iterating on the circle."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    y = np.asarray(x, dtype=float) % 1.0
    total = np.zeros_like(y)
    for _ in range(n):
        total = total + g(y)
        y = cmap(y)
    return total / n


def exponent_multiset(cmap: CircleMap, n: int, cap: int = DEFAULT_CAP,
                      workers: int | None = None) -> EmpiricalDistribution:
    fix = enumerate_fix(cmap, n, cap=cap, workers=workers)
    return EmpiricalDistribution.from_values(fix.exponent, period=n, degree=cmap.degree)


def log_derivative_sum_identity(cmap: CircleMap, fix: FixedPointSet) -> tuple[float, float]:
    """(sum of exponents, sum of h over the points); equal up to rounding."""
    h = log_derivative(cmap).h
    return math.fsum(fix.exponent), math.fsum(h(fix.point))
