"""Transfer-operator route to the mean exponent and the asymptotic variance.

The normalized operator K^{-1} L(w phi), with (L phi)(x) = sum_{f(y)=x} phi(y)
and weight w = exp(i t hhat), is projected onto e_k(x) = exp(2 pi i k x),
|k| <= N. Changing variables x = f(y) in the Fourier integral gives

    M[k, l] = K^{-1} int_0^1 exp(2 pi i (l y - k F(y))) f'(y) w(y) dy,

which only needs the forward map and is evaluated by the trapezoid rule.
The left leading eigenvector u (u M = kappa u) at t = 0, scaled so u_0 = 1,
holds the Fourier moments u_l = mu(e_l) of the measure of maximal entropy.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circle_map import CircleMap, log_derivative
from .errors import CapExceeded, ConvergenceFailure, DegenerateVariance, ParameterError, ResolutionError

DEFAULT_MODES = 64
MAX_MODES = 512
EIG_TOL = 1e-12
TAIL_TOL = 1e-10
DEGENERATE_SIGMA2 = 1e-9
_ROW_CHUNK = 64


def quadrature_size(degree: int, modes: int) -> int:
    return 16 * (modes + degree * modes)


@dataclass(frozen=True, eq=False)
class SpectralModel:
    map: CircleMap
    modes: int
    twist: float
    matrix: np.ndarray
    leading_eigenvalue: complex
    leading_eigenmeasure: np.ndarray
    leading_eigenfunction: np.ndarray
    contraction: float
    hhat: np.ndarray | None = None

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.modes, self.modes + 1)

    def coefficients(self, phi: Callable) -> np.ndarray:
        return fourier_coefficients(phi, self.modes, quadrature_size(self.map.degree, self.modes))

    def pairing(self, coeffs) -> complex:
        """Pair the leading eigenmeasure with a coefficient vector."""
        return complex(np.dot(self.leading_eigenmeasure, coeffs))

    def apply(self, coeffs) -> np.ndarray:
        return self.matrix @ coeffs


def fourier_coefficients(phi: Callable, modes: int, size: int) -> np.ndarray:
    """c_k = int phi(x) exp(-2 pi i k x) dx for |k| <= modes by the trapezoid rule."""
    x = np.arange(size) / size
    c = np.fft.fft(np.asarray(phi(x), dtype=complex)) / size
    k = np.arange(-modes, modes + 1)
    return c[k % size]


def evaluate(coeffs, x) -> np.ndarray:
    """Trigonometric polynomial sum_k c_k exp(2 pi i k x)."""
    modes = (len(coeffs) - 1) // 2
    k = np.arange(-modes, modes + 1)
    x = np.asarray(x, dtype=float)
    return np.exp(2j * np.pi * np.multiply.outer(x, k)) @ np.asarray(coeffs)


def multiply(a, b, size: int) -> np.ndarray:
    """Coefficients of the product of two trigonometric polynomials, truncated."""
    modes = (len(a) - 1) // 2
    k = np.arange(-modes, modes + 1)
    grid = np.zeros(size, dtype=complex)
    grid[k % size] = a
    fa = np.fft.ifft(grid) * size
    grid[:] = 0
    grid[k % size] = b
    fb = np.fft.ifft(grid) * size
    return (np.fft.fft(fa * fb) / size)[k % size]


def transfer_matrix(cmap: CircleMap, modes: int, weight: Callable | None = None) -> np.ndarray:
    K = cmap.degree
    Q = quadrature_size(K, modes)
    y = np.arange(Q) / Q
    Fy = cmap.lift(y)
    Fy = Fy - np.floor(Fy)  # k F(y) only matters mod 1 for integer k
    dens = cmap.derivative(y).astype(complex)
    if weight is not None:
        dens = dens * weight(y)
    k = np.arange(-modes, modes + 1)
    right = dens[:, None] * np.exp(2j * np.pi * np.multiply.outer(y, k))
    M = np.empty((k.size, k.size), dtype=complex)
    for s in range(0, k.size, _ROW_CHUNK):
        ks = k[s:s + _ROW_CHUNK]
        left = np.exp(-2j * np.pi * np.multiply.outer(ks, Fy))
        M[s:s + _ROW_CHUNK] = left @ right
    return M / (K * Q)


def _power(A, start, tol=EIG_TOL, max_iter=5000):
    """Power iteration for the dominant eigenvector of A (acting on columns).

    Returns (vector, eigenvalue, observed contraction ratio of the residual).
    """
    v = start / np.linalg.norm(start)
    prev_res, ratio = None, 0.0
    for _ in range(max_iter):
        Av = A @ v
        lam = np.vdot(v, Av)
        res = np.linalg.norm(Av - lam * v)
        if prev_res is not None and prev_res > 0 and res > 0:
            ratio = res / prev_res
        if res <= tol * max(abs(lam), 1e-300):
            return v, lam, ratio
        prev_res = res
        nrm = np.linalg.norm(Av)
        if nrm == 0:
            raise ResolutionError("operator annihilated the iterate")
        v = Av / nrm
    raise ResolutionError("power iteration did not settle; leading eigenvalue may not be simple")


def _tail(v, modes) -> float:
    band = max(1, modes // 8)
    a = np.abs(v)
    scale = max(float(np.max(a)), 1e-300)
    return float(max(np.max(a[:band]), np.max(a[-band:])) / scale)


def build_model(cmap: CircleMap, modes: int = DEFAULT_MODES, twist: float = 0.0,
                hhat: np.ndarray | None = None) -> SpectralModel:
    """Discretize the (twisted) normalized transfer operator and find its leading pair.

    ``hhat`` is the coefficient vector of the centered log-derivative; it is
    required when ``twist`` is non-zero.
    """
    if modes < 8:
        raise ParameterError("need at least 8 Fourier modes")
    weight = None
    if twist != 0.0:
        if hhat is None:
            raise ParameterError("a twisted model needs the centered observable; build at t = 0 first")
        coeffs = np.asarray(hhat)

        def weight(y):
            return np.exp(1j * twist * evaluate(coeffs, y).real)

    M = transfer_matrix(cmap, modes, weight)
    e0 = np.zeros(2 * modes + 1, dtype=complex)
    e0[modes] = 1.0

    if twist == 0.0:
        if np.linalg.norm(M @ e0 - e0) > TAIL_TOL:
            raise ResolutionError("K^{-1} L 1 != 1 at this quadrature size")
        w, gap = e0, 0.0
    else:
        w, _, gap = _power(M, e0)
        w = w / w[modes]
    u, _, gap_u = _power(M.T, e0)
    u = u / u[modes]
    kappa = complex(np.dot(u, M @ w) / np.dot(u, w))
    if _tail(w, modes) > TAIL_TOL:
        raise ResolutionError(f"eigenfunction not resolved with {modes} modes")
    return SpectralModel(cmap, modes, float(twist), M, kappa, u, w, max(gap, gap_u), hhat)


def _resolved(fn):
    """Retry with doubled modes on ResolutionError, from DEFAULT_MODES up to MAX_MODES."""

    @functools.wraps(fn)
    def wrapper(cmap, *args, modes=None, **kw):
        if modes is not None:
            return fn(cmap, *args, modes=modes, **kw)
        N = DEFAULT_MODES
        while True:
            try:
                return fn(cmap, *args, modes=N, **kw)
            except ResolutionError:
                if N >= MAX_MODES:
                    raise
                N *= 2

    return wrapper


@functools.lru_cache(maxsize=32)
def _base(cmap: CircleMap, modes: int):
    model = build_model(cmap, modes)
    h = log_derivative(cmap).h
    c_h = model.coefficients(h)
    if _tail(c_h, modes) > TAIL_TOL:
        raise ResolutionError(f"ln f' not resolved with {modes} modes")
    chi_bar = model.pairing(c_h).real
    c_hat = c_h.copy()
    c_hat[modes] -= chi_bar
    return model, chi_bar, c_hat


@_resolved
def base_model(cmap: CircleMap, modes=None) -> SpectralModel:
    return _base(cmap, modes)[0]


def mme_integral(model: SpectralModel, phi) -> float:
    """Integral of ``phi`` against the measure of maximal entropy."""
    if model.twist != 0.0:
        raise ParameterError("the eigenmeasure is a probability measure only at t = 0")
    coeffs = phi if isinstance(phi, np.ndarray) else model.coefficients(phi)
    if _tail(coeffs, model.modes) > TAIL_TOL and np.max(np.abs(coeffs)) > 0:
        raise ResolutionError("observable not resolved by the basis")
    return model.pairing(coeffs).real


@dataclass(frozen=True)
class MeanExponent:
    chi_bar: float
    hhat: Callable
    hhat_coeffs: np.ndarray
    modes: int


@_resolved
def mean_exponent(cmap: CircleMap, modes=None) -> MeanExponent:
    """chi_bar = mu(ln f') and the centered observable hhat = ln f' - chi_bar."""
    _, chi_bar, c_hat = _base(cmap, modes)
    h = log_derivative(cmap).h

    def hhat(x):
        return h(x) - chi_bar

    return MeanExponent(chi_bar, hhat, c_hat, modes)


def preimage_average(cmap: CircleMap, phi: Callable, depth: int, anchor: float,
                     cap: int = 2**24) -> float:
    """K^{-n} sum of phi over f^{-n}(anchor), from the full preimage tree."""
    from .circle_map import preimages

    if cmap.degree**depth > cap:
        raise CapExceeded(f"{cmap.degree}^{depth} preimages exceeds cap {cap}")
    pts = np.array([float(anchor) % 1.0])
    for _ in range(depth):
        pts = preimages(cmap, pts).reshape(-1)
    return math.fsum(np.asarray(phi(pts), dtype=float)) / pts.size


@_resolved
def autocorrelation(cmap: CircleMap, lag: int, modes=None) -> float:
    """mu(hhat * hhat o f^lag), computed as mu(hhat * (K^{-1} L)^lag hhat)."""
    if lag < 0:
        raise ParameterError("lag must be >= 0")
    model, _, c_hat = _base(cmap, modes)
    g = c_hat
    for _ in range(lag):
        g = model.apply(g)
    Q = quadrature_size(cmap.degree, modes)
    return model.pairing(multiply(c_hat, g, Q)).real


@dataclass(frozen=True)
class VarianceEstimate:
    sigma_squared: float
    truncation: int
    tail_bound: float
    terms: list
    ratio: float
    modes: int
    degenerate: bool = False


@_resolved
def asymptotic_variance(cmap: CircleMap, modes=None, strict: bool = True,
                        max_lag: int = 400) -> VarianceEstimate:
    """Green-Kubo sum mu(hhat^2) + 2 sum_{j>=1} mu(hhat * hhat o f^j).

    Terms are added until a geometric tail fitted to the last five terms
    is negligible. With ``strict`` a numerically vanishing result raises
    DegenerateVariance (the exception carries the estimate).
    """
    model, _, c_hat = _base(cmap, modes)
    Q = quadrature_size(cmap.degree, modes)
    terms = [model.pairing(multiply(c_hat, c_hat, Q)).real]
    g = c_hat
    ratio, tail = 0.0, math.inf
    floor = 1e-16 * max(abs(terms[0]), 1e-300)
    for j in range(1, max_lag + 1):
        g = model.apply(g)
        terms.append(model.pairing(multiply(c_hat, g, Q)).real)
        if j < 5:
            continue
        last = np.abs(terms[-5:])
        partial = terms[0] + 2 * math.fsum(terms[1:])
        if np.all(last <= floor) or terms[0] == 0.0:
            tail = 10 * float(np.max(last))
            break
        ratio = float((last[-1] / last[0]) ** 0.25) if last[0] > 0 else 0.0
        if ratio < 1.0:
            tail = 2 * float(last[-1]) * ratio / (1.0 - ratio)
            if tail <= 1e-14 * max(1.0, abs(partial)):
                break
    else:
        raise ConvergenceFailure(f"autocorrelations did not decay within {max_lag} lags")
    s2 = terms[0] + 2 * math.fsum(terms[1:])
    degenerate = s2 < DEGENERATE_SIGMA2
    est = VarianceEstimate(max(s2, 0.0) if degenerate else s2, len(terms) - 1, tail,
                           terms, ratio, modes, degenerate)
    if degenerate and strict:
        raise DegenerateVariance(f"sigma^2 = {s2:.3g} below {DEGENERATE_SIGMA2}: "
                                 "map is numerically conjugate to the linear one", est)
    return est


@functools.lru_cache(maxsize=256)
def _kappa(cmap, t, modes):
    _, _, c_hat = _base(cmap, modes)
    return build_model(cmap, modes, t, c_hat).leading_eigenvalue


@_resolved
def twisted_eigenvalue(cmap: CircleMap, t: float, modes=None) -> complex:
    """Leading eigenvalue kappa(t) of phi -> K^{-1} L(exp(i t hhat) phi)."""
    if abs(t) > 0.5:
        raise ParameterError("twist must satisfy |t| <= 0.5")
    if t == 0.0:
        return 1.0 + 0.0j
    return _kappa(cmap, float(t), modes)


def curvature_variance(cmap: CircleMap, t: float = 0.02, modes=None) -> float:
    """sigma^2 estimated as -(kappa(t) + kappa(-t) - 2) / t^2."""
    kp = twisted_eigenvalue(cmap, t, modes=modes)
    km = twisted_eigenvalue(cmap, -t, modes=modes)
    return float(-((kp + km).real - 2.0) / (t * t))
