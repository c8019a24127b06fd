"""End-to-end acceptance checks; each test records one PASS/FAIL summary line."""
import math
import time

import numpy as np
import pytest

from lyapchi import DegenerateVariance, clt_study
from lyapchi.circle_map import log_derivative, preimages
from lyapchi.cli import main
from lyapchi.spectral import (asymptotic_variance, base_model, curvature_variance, mean_exponent,
                              mme_integral, preimage_average)
from lyapchi.stats import (EmpiricalDistribution, histogram, ks_distance, loglog_slope, normalize,
                           smoothed_unimodal, streaming_variance)

from conftest import BUILTIN_IDS, builtin, fixset
from test_stats import brute_force_ks

NONLINEAR = ("trigdoubling:0.01", "blaschke:0.1")
ANCHORS = (0.123, 0.6)


def exponents(map_id, n):
    return EmpiricalDistribution.from_values(fixset(map_id, n).exponent, n)


def test_counting(acceptance):
    problems = []
    t20 = {}
    for map_id in BUILTIN_IDS:
        m = builtin(map_id)
        for n in range(1, 21):
            start = time.perf_counter()
            fix = fixset(map_id, n)
            if n == 20:
                t20[map_id] = time.perf_counter() - start
            gaps = np.diff(np.append(fix.point, fix.point[0] + 1.0))
            if len(fix) != 2**n - 1:
                problems.append(f"{map_id} n={n}: {len(fix)} records")
            if n > 1 and gaps.min() < 0.5 * m.max_derivative ** (-n):
                problems.append(f"{map_id} n={n}: min gap {gaps.min():.3g}")
            if fix.residual.max() > 1e-12:
                problems.append(f"{map_id} n={n}: residual {fix.residual.max():.3g}")
    slowest = max(t20.values())
    if slowest >= 60:
        problems.append(f"n=20 took {slowest:.1f}s")
    ok = acceptance(1, not problems,
                    "; ".join(problems) or f"2^n-1 separated records for n<=20, slowest n=20 run {slowest:.1f}s")
    assert ok, problems


def test_degenerate_linear(acceptance):
    worst = max(np.max(np.abs(fixset("linear:2", n).exponent - math.log(2))) for n in range(1, 21))
    try:
        asymptotic_variance(builtin("linear:2"))
        flagged = False
    except DegenerateVariance:
        flagged = True
    ok = acceptance(2, worst <= 1e-12 and flagged,
                    f"max |chi - ln 2| = {worst:.2e}, DegenerateVariance raised: {flagged}")
    assert ok


def test_mean_convergence(acceptance):
    m = builtin("trigdoubling:0.01")
    chi = mean_exponent(m).chi_bar
    ns = [8, 10, 12, 14, 16]
    errs = [abs(exponents("trigdoubling:0.01", n).mean() - chi) for n in ns]
    decreasing = all(a > b for a, b in zip(errs, errs[1:]))
    rate = float(np.polyfit(ns, np.log(errs), 1)[0])
    h = log_derivative(m).h
    route_gap = max(abs(preimage_average(m, h, 18, a) - chi) for a in ANCHORS)
    ok = acceptance(3, decreasing and rate <= -0.5 * math.log(2) and route_gap <= 1e-6,
                    f"errors {['%.2e' % e for e in errs]}, rate {rate:.3f} (need <= {-0.5 * math.log(2):.3f}), "
                    f"spectral vs preimage {route_gap:.1e}")
    assert ok


@pytest.mark.parametrize("map_id", NONLINEAR)
def test_variance_convergence(acceptance, map_id):
    s2 = asymptotic_variance(builtin(map_id)).sigma_squared
    err = {n: abs(n * exponents(map_id, n).variance() - s2) for n in (10, 20)}
    ok = acceptance(f"4 [{map_id}]", err[20] <= 0.05 * s2 and err[20] < err[10],
                    f"|n Var - sigma^2| / sigma^2 = {err[10] / s2:.2e} (n=10), {err[20] / s2:.2e} (n=20)")
    assert ok


@pytest.mark.parametrize("map_id", NONLINEAR)
def test_twisted_curvature(acceptance, map_id):
    m = builtin(map_id)
    s2 = asymptotic_variance(m).sigma_squared
    curv = curvature_variance(m, 0.02)
    rel = abs(curv - s2) / s2
    ok = acceptance(f"5 [{map_id}]", rel <= 0.01,
                    f"curvature {curv:.9e} vs Green-Kubo {s2:.9e}, relative gap {rel:.1e}")
    assert ok


def test_clt_distance_decay(acceptance):
    m = builtin("trigdoubling:0.01")
    ns = [10, 12, 14, 16, 18, 20]
    start = time.perf_counter()
    study = clt_study(m, ns)
    elapsed = time.perf_counter() - start
    slope = loglog_slope(ns, [r.ks_distance for r in study.reports])
    first, last = study.reports[0], study.reports[-1]
    worse = [(a["a"], a["b"], a["discrepancy"], b["discrepancy"])
             for a, b in zip(first.interval_discrepancies, last.interval_discrepancies)
             if not b["discrepancy"] < a["discrepancy"]]
    ok = slope <= -0.2 and not worse and elapsed < 300
    detail = f"KS slope {slope:.3f}, study {elapsed:.1f}s"
    for a, b, d10, d20 in worse:
        detail += f"; interval [{a}, {b}] discrepancy {d20:.4f} at n=20 not below {d10:.4f} at n=10"
    acceptance(6, ok, detail)
    assert ok, detail


def test_histogram_unimodal(acceptance):
    details, ok = [], True
    for map_id in NONLINEAR:
        m = builtin(map_id)
        chi = mean_exponent(m).chi_bar
        sigma = math.sqrt(asymptotic_variance(m).sigma_squared)
        counts = histogram(normalize(exponents(map_id, 20), chi, sigma), 100).counts
        uni = smoothed_unimodal(counts)
        ok &= uni
        details.append(f"{map_id} unimodal={uni}")
    acceptance(7, ok, ", ".join(details) + " (n=20, 100 bins, window 5, slack 2)")
    assert ok, details


def test_lebesgue_invariance(acceptance):
    m = builtin("blaschke:0.1")
    x = np.linspace(0, 1, 1000, endpoint=False)
    sup = float(np.max(np.abs(np.sum(1 / m.derivative(preimages(m, x)), axis=1) - 1)))
    ok = acceptance(8, sup <= 1e-8, f"sup |sum 1/f' - 1| = {sup:.2e}")
    assert ok


def test_oracle_equivalence(acceptance):
    gaps = {}
    # spectral eigenmeasure vs preimage tree
    worst = 0.0
    for map_id in NONLINEAR:
        m = builtin(map_id)
        h = log_derivative(m).h
        model = base_model(m)
        for phi in (h, lambda x: h(x) ** 2, lambda x: np.cos(2 * np.pi * x)):
            val = mme_integral(model, phi)
            worst = max(worst, *(abs(preimage_average(m, phi, 18, a) - val) for a in ANCHORS))
    gaps["mme"] = (worst, 1e-6)

    # exact KS vs O(N^2) brute force on real normalized exponents
    worst = 0.0
    for map_id in NONLINEAR:
        m = builtin(map_id)
        chi = mean_exponent(m).chi_bar
        sigma = math.sqrt(asymptotic_variance(m).sigma_squared)
        for n in (6, 8, 9):
            z = normalize(exponents(map_id, n), chi, sigma)
            worst = max(worst, abs(ks_distance(z) - brute_force_ks(z.values)))
    gaps["ks"] = (worst, 1e-12)

    # two-pass vs Welford on the largest multisets
    worst = 0.0
    for map_id in NONLINEAR:
        d = exponents(map_id, 20)
        _, var = streaming_variance(d.values)
        worst = max(worst, abs(var - d.variance()) / d.variance())
    gaps["variance"] = (worst, 1e-12)

    # mode doubling
    worst = 0.0
    for map_id in NONLINEAR:
        m = builtin(map_id)
        worst = max(worst, abs(mean_exponent(m, modes=64).chi_bar - mean_exponent(m, modes=128).chi_bar),
                    abs(asymptotic_variance(m, modes=64).sigma_squared
                        - asymptotic_variance(m, modes=128).sigma_squared))
    gaps["modes"] = (worst, 1e-9)

    ok = all(v <= tol for v, tol in gaps.values())
    acceptance(9, ok, ", ".join(f"{k} {v:.1e} (tol {tol:.0e})" for k, (v, tol) in gaps.items()))
    assert ok, gaps


def test_determinism(acceptance, tmp_path):
    out = {}
    for threads in ("1", "8"):
        path = tmp_path / f"clt_{threads}.json"
        code = main(["clt", "--map", "trigdoubling:0.01", "--periods", "10,12", "--threads", threads,
                     "--out", str(path)])
        assert code == 0
        out[threads] = path.read_bytes()
    ok = acceptance(10, out["1"] == out["8"], f"{len(out['1'])} bytes, identical: {out['1'] == out['8']}")
    assert ok
