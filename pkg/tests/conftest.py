import functools

import numpy as np
import pytest
from scipy.optimize import brentq

from lyapchi import from_id
from lyapchi.periodic_points import enumerate_fix

BUILTIN_IDS = ("linear:2", "trigdoubling:0.01", "blaschke:0.1")

_acceptance_lines = []


@functools.lru_cache(maxsize=None)
def builtin(map_id):
    return from_id(map_id)


@functools.lru_cache(maxsize=None)
def fixset(map_id, n):
    """Enumerations are expensive at n = 20; share them across test modules."""
    return enumerate_fix(builtin(map_id), n)


@pytest.fixture(scope="session")
def linear():
    return builtin("linear:2")


@pytest.fixture(scope="session")
def trig():
    return builtin("trigdoubling:0.01")


@pytest.fixture(scope="session")
def blaschke():
    return builtin("blaschke:0.1")


def brute_force_fix(cmap, n, grid=10**6):
    """Independent periodic-point oracle.

    Iterates the raw lift (no mod-1 bookkeeping), looks for integer crossings
    of F^n(x) - x on a uniform grid and refines each by Brent's method.
    Returns (points in [0, 1), exponents) sorted by point.
    """
    def G(x):
        y = x
        for _ in range(n):
            y = cmap.lift(y)
        return y - x

    x = np.linspace(0.0, 1.0, grid + 1)
    g = G(x)
    levels = np.floor(g)
    roots = []
    if g[0] == levels[0]:
        roots.append(0.0)
    for j in np.nonzero(np.diff(levels))[0]:
        lvl = levels[j + 1]
        if x[j + 1] == 1.0 and g[-1] == lvl:
            continue  # x = 1 is the point 0 already counted
        roots.append(brentq(lambda t: float(G(t)) - lvl, x[j], x[j + 1], xtol=1e-15, rtol=1e-15))
    pts = np.sort(np.array(roots) % 1.0)
    expo = np.zeros_like(pts)
    y = pts.copy()
    for _ in range(n):
        expo += np.log(cmap.derivative(y))
        y = cmap(y)
    return pts, expo / n


@pytest.fixture
def acceptance():
    def record(criterion, passed, detail=""):
        _acceptance_lines.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
