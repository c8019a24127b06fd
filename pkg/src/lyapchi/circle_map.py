"""Expanding circle maps given by their lifts.

A map f of the circle T = R/Z is stored through a lift F: R -> R with
F(x + 1) = F(x) + K, together with f' and f''. All callables are vectorized
over numpy arrays and pure, so a ``CircleMap`` can be shared between threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InconsistentMap, NotExpanding, ParameterError

TWO_PI = 2.0 * math.pi

DEFAULT_CERT_GRID = 4096


class Family(str, enum.Enum):
    LINEAR = "linear"
    TRIG_DOUBLING = "trigdoubling"
    BLASCHKE = "blaschke"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ExpansivityCertificate:
    lambda_star: float
    max_second_derivative: float
    grid_size: int
    max_derivative: float


@dataclass(frozen=True, eq=False)
class CircleMap:
    """An orientation preserving expanding circle map of degree ``degree``.

    ``lift``, ``derivative`` and ``second_derivative`` accept floats or arrays.
    The lift is normalized so that ``lift(0)`` lies in [0, 1).
    """

    family: Family
    degree: int
    lift: Callable
    derivative: Callable
    second_derivative: Callable
    parameters: tuple = ()
    certificate: ExpansivityCertificate | None = field(default=None, repr=False)

    @property
    def map_id(self) -> str:
        if self.family is Family.CUSTOM:
            return "custom"
        return f"{self.family.value}:{format_param(self.parameters[0])}"

    @property
    def lambda_star(self) -> float:
        return self.certificate.lambda_star

    @property
    def max_derivative(self) -> float:
        return self.certificate.max_derivative

    def __call__(self, x):
        """The circle map itself, values in [0, 1)."""
        y = self.lift(x)
        return y - np.floor(y)

    def __hash__(self):
        return id(self)


def format_param(p) -> str:
    if isinstance(p, (int, np.integer)):
        return str(int(p))
    return repr(float(p))


# ---------------------------------------------------------------- built-ins

def _linear(K: int):
    K = int(K)

    def lift(x):
        return K * np.asarray(x, dtype=float)

    def d1(x):
        return np.full_like(np.asarray(x, dtype=float), float(K))

    def d2(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    return lift, d1, d2


def _trig_doubling(eps: float):
    # x -> 2x + eps (sin 2 pi x + cos 2 pi x - 1)
    def lift(x):
        x = np.asarray(x, dtype=float)
        u = TWO_PI * x
        return 2.0 * x + eps * (np.sin(u) + np.cos(u) - 1.0)

    def d1(x):
        u = TWO_PI * np.asarray(x, dtype=float)
        return 2.0 + TWO_PI * eps * (np.cos(u) - np.sin(u))

    def d2(x):
        u = TWO_PI * np.asarray(x, dtype=float)
        return -TWO_PI * TWO_PI * eps * (np.sin(u) + np.cos(u))

    return lift, d1, d2


def _blaschke(a: float):
    """Angle map of z -> z (z - a) / (1 - a z) for real a in (-1, 1).

    With phi = 2 pi theta, arg B(e^{i phi}) = 2 phi + 2 atan2(a sin phi, 1 - a cos phi),
    and the derivative is 1 plus the Poisson kernel (1 - a^2) / |1 - a e^{i phi}|^2.
    """
    a2 = a * a

    def lift(x):
        x = np.asarray(x, dtype=float)
        u = TWO_PI * x
        return 2.0 * x + np.arctan2(a * np.sin(u), 1.0 - a * np.cos(u)) / math.pi

    def d1(x):
        u = TWO_PI * np.asarray(x, dtype=float)
        return 1.0 + (1.0 - a2) / (1.0 - 2.0 * a * np.cos(u) + a2)

    def d2(x):
        u = TWO_PI * np.asarray(x, dtype=float)
        den = 1.0 - 2.0 * a * np.cos(u) + a2
        return -TWO_PI * (1.0 - a2) * 2.0 * a * np.sin(u) / (den * den)

    return lift, d1, d2


def make_builtin(family, parameter) -> CircleMap:
    """Build one of the built-in maps and certify that it is expanding.

    ``family`` is a :class:`Family` or its string value; ``parameter`` is the
    degree K for ``linear``, the amplitude eps for ``trigdoubling`` and the real
    zero a for ``blaschke``.
    """
    family = Family(family)
    if family is Family.LINEAR:
        if int(parameter) != parameter or parameter < 2:
            raise ParameterError(f"linear map needs an integer degree K >= 2, got {parameter!r}")
        K = int(parameter)
        lift, d1, d2 = _linear(K)
        params = (K,)
    elif family is Family.TRIG_DOUBLING:
        eps = float(parameter)
        if not math.isfinite(eps):
            raise ParameterError("trig perturbation amplitude must be finite")
        K = 2
        lift, d1, d2 = _trig_doubling(eps)
        params = (eps,)
    elif family is Family.BLASCHKE:
        a = float(parameter)
        if not -1.0 < a < 1.0:
            raise ParameterError(f"Blaschke zero must satisfy |a| < 1, got {a!r}")
        K = 2
        lift, d1, d2 = _blaschke(a)
        params = (a,)
    else:
        raise ParameterError("use custom_map() for user supplied maps")

    draft = CircleMap(family, K, lift, d1, d2, params)
    try:
        cert = expansivity_certificate(draft)
    except NotExpanding as exc:
        raise NotExpanding(f"{draft.map_id}: {exc}") from None
    return CircleMap(family, K, lift, d1, d2, params, cert)


def from_id(map_id: str) -> CircleMap:
    """Parse ``linear:K``, ``trigdoubling:eps`` or ``blaschke:a``."""
    name, sep, value = map_id.partition(":")
    if not sep:
        raise ParameterError(f"map id must look like 'family:parameter', got {map_id!r}")
    try:
        family = Family(name.strip().lower())
    except ValueError:
        raise ParameterError(f"unknown map family {name!r}") from None
    if family is Family.CUSTOM:
        raise ParameterError("custom maps are not addressable by id")
    try:
        param = int(value) if family is Family.LINEAR else float(value)
    except ValueError:
        raise ParameterError(f"bad parameter {value!r} in map id {map_id!r}") from None
    return make_builtin(family, param)


def custom_map(lift, derivative, second_derivative, degree: int,
               grid_size: int = DEFAULT_CERT_GRID) -> CircleMap:
    """Wrap user callables; consistency and expansivity are checked, not trusted."""
    if int(degree) != degree or degree < 2:
        raise ParameterError("degree must be an integer >= 2")
    degree = int(degree)

    def _vec(fn):
        def wrapped(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy()
        return wrapped

    raw_lift = _vec(lift)
    shift = math.floor(float(raw_lift(0.0)))

    def norm_lift(x):
        return raw_lift(x) - shift

    draft = CircleMap(Family.CUSTOM, degree, norm_lift, _vec(derivative),
                      _vec(second_derivative), ())
    check_consistency(draft)
    cert = expansivity_certificate(draft, grid_size)
    return CircleMap(Family.CUSTOM, degree, norm_lift, draft.derivative,
                     draft.second_derivative, (), cert)


def check_consistency(cmap: CircleMap, grid_size: int = 10_000, delta: float = 1e-5) -> None:
    """Degree and derivative consistency on a grid; raises InconsistentMap."""
    x = np.arange(grid_size) / grid_size
    F = cmap.lift
    jump = F(x + 1.0) - F(x)
    if np.max(np.abs(jump - cmap.degree)) > 1e-12 * max(1.0, np.max(np.abs(F(x)))):
        raise InconsistentMap("F(x+1) - F(x) differs from the degree")

    d1 = cmap.derivative(x)
    d2 = cmap.second_derivative(x)
    h = 1.0 / grid_size
    d3_scale = np.max(np.abs(cmap.second_derivative(x + h) - cmap.second_derivative(x - h))) / (2 * h)
    fd1 = (F(x + delta) - F(x - delta)) / (2 * delta)
    fd2 = (cmap.derivative(x + delta) - cmap.derivative(x - delta)) / (2 * delta)
    # truncation error is delta^2 |F'''| / 6, rounding error ~ eps |F| / delta
    rounding = 1e-15 * (cmap.degree + 2) / delta
    if np.max(np.abs(fd1 - d1)) > 10 * delta**2 * d3_scale + 10 * rounding + 1e-9:
        raise InconsistentMap("derivative is not the derivative of the lift")
    if np.max(np.abs(fd2 - d2)) > 10 * delta**2 * d3_scale * 10 + 10 * rounding * np.max(np.abs(d1)) + 1e-7:
        raise InconsistentMap("second derivative is not the derivative of f'")


def expansivity_certificate(cmap: CircleMap, grid_size: int = DEFAULT_CERT_GRID) -> ExpansivityCertificate:
    """Lower bound lambda_* for f' from a grid scan with a Lipschitz correction.

    Between grid points spaced h the minimum of f' can sit at most h/2 away
    from a sample, so min f' >= min_grid f' - max|f''| h / 2. A further slack of
    max|f''| h^2 covers the variation of |f''| itself between samples.
    """
    if grid_size < 1024:
        raise ParameterError("certification grid must have at least 1024 points")
    x = np.arange(grid_size) / grid_size
    d1 = cmap.derivative(x)
    d2 = np.abs(cmap.second_derivative(x))
    h = 1.0 / grid_size
    m2 = float(np.max(d2))
    slack = m2 * h * h
    lam = float(np.min(d1)) - m2 * h / 2.0 - slack
    if not lam > 1.0:
        raise NotExpanding(f"certified min f' = {lam:.6g} is not above 1")
    max_d1 = float(np.max(d1)) + m2 * h / 2.0 + slack
    return ExpansivityCertificate(lam, m2, grid_size, max_d1)


class LogDerivative(NamedTuple):
    h: Callable
    dh: Callable


def log_derivative(cmap: CircleMap) -> LogDerivative:
    """h = ln f' and h' = f''/f'."""
    d1, d2 = cmap.derivative, cmap.second_derivative

    def h(x):
        return np.log(d1(x))

    def dh(x):
        return d2(x) / d1(x)

    return LogDerivative(h, dh)


def preimages(cmap: CircleMap, z, tol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
    """All K preimages in [0, 1) of each point of ``z``, shape ``z.shape + (K,)``.

    Uses bracketed Newton on the monotone lift restricted to [0, 1].
    """
    z = np.asarray(z, dtype=float)
    K = cmap.degree
    F0 = float(cmap.lift(0.0))
    # targets z + j in [F0, F0 + K)
    j = np.arange(K)
    base = z[..., None] + j
    targets = np.where(base < F0, base + K, base)
    targets = np.where(targets >= F0 + K, targets - K, targets)
    return _solve_monotone(cmap.lift, cmap.derivative, targets, tol, max_iter)


def _solve_monotone(F, dF, targets, tol, max_iter):
    lo = np.zeros_like(targets)
    hi = np.ones_like(targets)
    x = np.clip((targets - float(F(0.0))) / (float(F(1.0)) - float(F(0.0))), 0.0, 1.0)
    for _ in range(max_iter):
        r = F(x) - targets
        lo = np.where(r <= 0, x, lo)
        hi = np.where(r >= 0, x, hi)
        step = r / dF(x)
        xn = x - step
        bad = ~((xn >= lo) & (xn <= hi))
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= tol
        x = xn
        if np.all(done | (hi - lo <= tol)):
            break
    return x
