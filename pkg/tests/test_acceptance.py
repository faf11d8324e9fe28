"""Desk-scale acceptance checks.

Each test prints one ``criterion n: PASS/FAIL`` line; the lines are repeated
in the terminal summary.  Run just these with

    python3 -m pytest -v tests/test_acceptance.py
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_spec, record_criterion
from modcorr.correlate import CorrelationRequest, convergence_scan, correlation_bruteforce, correlation_windowed
from modcorr.counting import moment_exact
from modcorr.oscphase import (
    bound_exponential,
    bprocess_sum,
    oscillatory_integral_direct,
    stationary_phase_leading,
)
from modcorr.seqgen import ONE, SQRT2, SQRT3, PointSet, generate_points
from modcorr.testfn import TestFunction1D, TestFunctionProduct
from modcorr.weyl import error_term_rhs, weyl_magnitudes, weyl_sum_direct

ROOT = Path(__file__).resolve().parents[1]
ALPHAS = {"one": ONE, "sqrt2": SQRT2, "sqrt3": SQRT3}


def test_criterion_01_windowed_matches_bruteforce():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(60):
        fam = ("quadratic", "sqrt")[case % 2]
        spec = make_spec(fam, str(rng.choice(list(ALPHAS))))
        m = int(rng.integers(2, 4))
        N = int(rng.integers(20, 501 if m == 2 else 201))
        tau = float(rng.uniform(0.3, 0.9))
        radius = float(rng.uniform(0.5, 1.5))
        if case % 4 < 2:
            factor = TestFunction1D.bump(radius)
        else:
            lo = float(rng.uniform(-radius, 0.0))
            factor = TestFunction1D.box(lo, lo + radius)
        req = CorrelationRequest(spec, m, tau, N, TestFunctionProduct.repeat(factor, m - 1))
        fast = correlation_windowed(req).value
        slow = correlation_bruteforce(req)
        worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60
    record_criterion(1, ok, f"60 cases, worst relative difference {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_02_stationary_phase_sweep():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    ratios = []
    while len(ratios) < 200:
        alpha = ALPHAS[str(rng.choice(list(ALPHAS)))]
        N = int(rng.choice([10**3, 10**4]))
        k = int(rng.integers(10, 101))
        ka = float(alpha) * k
        r_lo = math.floor(ka / (2 * math.sqrt(N))) + 1
        r_hi = math.ceil(ka / 2) - 1
        if r_hi < r_lo:
            continue
        r = int(rng.integers(r_lo, r_hi + 1))
        s = stationary_phase_leading(k, r, alpha, N)
        o = oscillatory_integral_direct(k, r, alpha, 1.0, float(N), 1e-9)
        ratios.append(abs(o - s.leading) / s.envelope)
    elapsed = time.perf_counter() - t0
    ratios = np.array(ratios)
    frac_in = float(np.mean(ratios <= 1.0))
    ok = frac_in >= 0.99 and ratios.max() <= 3.0 and elapsed < 300
    record_criterion(
        2, ok, f"200 cases, {frac_in:.1%} within envelope, worst ratio {ratios.max():.3g}, {elapsed:.1f} s"
    )
    assert ok


def test_criterion_03_bprocess_matches_direct():
    t0 = time.perf_counter()
    ks = [10, 22, 46, 100, 215, 464, 1000]
    worst = 0.0
    n_cases = 0
    for name in ALPHAS:
        spec = make_spec("sqrt", name)
        for N in (10**4, 10**5, 10**6):
            for k in ks:
                b = bprocess_sum(spec, N, k).record.value
                d = weyl_sum_direct(spec, N, k).value
                bound = 5 * (math.sqrt(k) * N**0.25 + N**0.75 / math.sqrt(k) * math.log(N))
                worst = max(worst, abs(b - d) / bound)
                n_cases += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1.0 and elapsed < 600
    record_criterion(3, ok, f"{n_cases} cases, worst |difference| / bound {worst:.3g}, {elapsed:.1f} s")
    assert ok


def test_criterion_04_bprocess_speed():
    spec = make_spec("sqrt", "sqrt2")
    N, k = 10**7, 10**3
    bprocess_sum(spec, 10**4, 10)  # compile outside the timed region
    weyl_sum_direct(spec, 10**4, 10)
    t0 = time.perf_counter()
    for _ in range(5):
        bprocess_sum(spec, N, k)
    t_b = (time.perf_counter() - t0) / 5
    t0 = time.perf_counter()
    weyl_sum_direct(spec, N, k)
    t_d = time.perf_counter() - t0
    speedup = t_d / t_b
    ok = speedup >= 100
    record_criterion(4, ok, f"direct {t_d:.3f} s, B-process {t_b * 1e3:.2f} ms, speedup {speedup:.0f}x")
    assert ok


def test_criterion_05_weyl_bound_monitor():
    N = 10**6
    parts = []
    ok = True
    for name in ALPHAS:
        mags = weyl_magnitudes(make_spec("sqrt", name), N, 1000)
        ratio = max(mags[k] / bound_exponential(N, k) for k in range(1, 1001))
        parts.append(f"{name} {ratio:.3f}")
        ok &= ratio <= 8
    record_criterion(5, ok, "max |S| / bound: " + ", ".join(parts))
    assert ok


def test_criterion_06_long_range_convergence():
    t0 = time.perf_counter()
    f = TestFunctionProduct.repeat(TestFunction1D.bump(1.0), 1)
    rows = convergence_scan(make_spec("quadratic", "sqrt2"), 2, 0.5, f, [10**4, 10**5, 10**6])
    elapsed = time.perf_counter() - t0
    devs = [abs(r.report.ratio - 1) for r in rows]
    monotone = devs[0] > devs[1] > devs[2]
    ok = monotone and devs[2] <= 0.1 and elapsed < 600
    detail = ", ".join(f"N={r.N}: {d:.3g}" for r, d in zip(rows, devs))
    record_criterion(6, ok, f"|ratio - 1| {detail}; monotone={monotone}, {elapsed:.1f} s")
    assert ok


def test_criterion_07_window_moments():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(20):
        N = int(rng.integers(10, 5000))
        pts = PointSet.from_values(rng.random(N))
        L = float(rng.uniform(0.1, 0.9)) * N
        worst = max(worst, abs(moment_exact(pts, L, 1).exact_moment - L))
    N = 10**6
    L = N**0.5
    r2 = moment_exact(generate_points(make_spec("quadratic", "sqrt2"), N), L, 2).ratio
    ok = worst <= 1e-12 and 0.9 <= r2 <= 1.1
    record_criterion(7, ok, f"first-moment worst error {worst:.2e}; E[W^2]/L^2 = {r2:.5f} at N=1e6")
    assert ok


def test_criterion_08_error_functional_decay():
    spec = make_spec("sqrt", "one")
    vals = []
    for N in (10**4, 10**5, 10**6):
        vals.append(error_term_rhs(spec, 2, N, N**0.7, 0.7).combined)
    ok = vals[0] > vals[1] > vals[2]
    record_criterion(8, ok, "normalised functional " + ", ".join(f"{v:.4f}" for v in vals))
    assert ok


def test_criterion_09_nested_sum_oracle():
    spec = make_spec("sqrt", "sqrt3")
    N, M, K = 10, 2, 3
    S = {k: abs(weyl_sum_direct(spec, N, k).value) for k in range(-2 * K, 2 * K + 1)}
    total = 0.0
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            if k1 == 0 and k2 == 0:
                continue
            total += S[k1] * S[k2] * S[-k1 - k2]
    want = total / N**3
    got = error_term_rhs(spec, 3, N, M, 0.5).E_m_rhs
    rel = abs(got - want) / want
    ok = rel <= 1e-12
    record_criterion(9, ok, f"relative difference {rel:.2e}")
    assert ok


COMMANDS = {
    "points_sqrt": "points",
    "correlate_quadratic": "correlate",
    "moments_quadratic": "moments",
    "weyl_sqrt": "weyl",
    "bprocess": "bprocess",
    "thresholds_sqrt_m3": "thresholds",
    "spi_sweep": "spi-sweep",
}


def test_criterion_10_thread_determinism(tmp_path):
    bad = []
    for cfg in sorted((ROOT / "configs").glob("*.cfg")):
        command = COMMANDS[cfg.stem]
        outs = []
        for t in (1, 4, 8):
            out = tmp_path / f"{cfg.stem}_{t}"
            proc = subprocess.run(
                [sys.executable, "-m", "modcorr.cli", command, "--config", str(cfg), "--out", str(out), "--threads", str(t)],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outs.append(next(out.glob("*.csv")).read_bytes())
        if not outs[0] == outs[1] == outs[2]:
            bad.append(cfg.stem)
    ok = not bad
    n = len(COMMANDS)
    record_criterion(10, ok, f"{n} configs x threads 1/4/8, differing: {bad or 'none'}")
    assert ok
