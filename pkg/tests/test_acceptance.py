"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Every test prints a single ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line straight to the terminal, then asserts.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from flownoise import checks, estimators, perturb

SEED = 20240611


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, summary):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {summary}")
        assert ok, summary

    return emit


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def test_criterion_01_chaos_eigenvalue_law(verdict):
    res, dt = timed(checks.chaos_eigenvalue_law, max_steps=12)
    err = res.detail["max_relative_error"]
    verdict(1, err <= 1e-12 and dt < 5, f"Z_m toy eigenvalue law, max rel err {err:.2e} (<=1e-12), {dt:.2f}s (<5s)")


def test_criterion_02_spectral_product_law(verdict):
    res, dt = timed(checks.spectral_product_law, trials=20, max_factors=10)
    err = res.detail["max_abs_error"]
    verdict(2, err <= 1e-12, f"spectral measure of Exp g is product Bernoulli, max err {err:.2e} (<=1e-12)")


def test_criterion_03_sensitivity_decay(verdict):
    n = 8
    curve, dt = timed(
        perturb.sensitivity_curve, perturb.zm_character(2), "zm-toy", {"m": 2}, n,
        (0.5, 0.8, 0.9, 0.99), 100_000, SEED,
    )
    zs = [abs(e.value - rho ** (n + 1)) / e.std_error for rho, e in curve]
    ok = max(zs) <= 3 and dt < 10
    verdict(3, ok, f"m=2 character correlation vs rho^9, worst |z| {max(zs):.2f} (<=3), {dt:.2f}s (<10s)")


def test_criterion_04_semigroup_exactness(verdict):
    res, dt = timed(checks.semigroup_laws, instances=10_000, kinds=("coal", "split", "sticky"))
    rel = all(res.detail["relations"].values())
    verdict(4, res.passed and dt < 1,
            f"laws on 10^4 instances of {'/'.join(res.detail['kinds'])}, {len(res.detail['failures'])} failures, "
            f"lattice relations {'hold' if rel else 'broken'}, {dt:.2f}s (<1s)")


def test_criterion_05_coalescence_dual(verdict):
    res, dt = timed(checks.coalescence_dual, paths=1000, length=1000)
    verdict(5, res.passed and dt < 1, f"b = -min a on 1000 paths of length 1000, {dt:.2f}s (<1s)")


def test_criterion_06_beta_identity(verdict):
    res, dt = timed(checks.beta_identity, max_n=8)
    verdict(6, res.passed and dt < 1, f"beta moment identity, max rel err {res.detail['max_relative_error']:.1e} (<=1e-10), {dt:.2f}s (<1s)")


def test_criterion_07_detailed_balance(verdict):
    res, dt = timed(checks.sticky_balance, max_m=5, max_n=4)
    reps = res.detail["reports"]
    viol = max(r["max_violation"] for r in reps)
    stat = max(r["stationarity_error"] for r in reps)
    verdict(7, res.passed and dt < 30,
            f"{len(reps)} (m,n) cases, max channel asymmetry {viol:.1e}, max |mu P - mu| {stat:.1e} (<=1e-10), {dt:.2f}s (<30s)")


def test_criterion_08_sticky_convolution(verdict):
    rep, dt = timed(estimators.sticky_convolution_check, 0.3, 0.7, 1.0, 100_000, SEED)
    d = rep.details
    verdict(8, rep.passed and dt < 30,
            f"atom z {d['atom_z']:.2f} (<=3), KS {rep.statistic:.4f} vs {rep.threshold:.4f}, {dt:.2f}s (<30s)")


def test_criterion_09_poisson_snake(verdict):
    start = time.perf_counter()
    rows = []
    for i, lam in enumerate((0.5, 1.0, 2.0)):
        rep = estimators.snake_spot_statistics(lam, 1 / 16, 65_536, SEED + i, replicas=2000)
        rows.append((lam, rep))
    dt = time.perf_counter() - start
    ok = all(r.passed for _, r in rows) and dt < 60
    parts = ", ".join(f"lam={lam}: {r.details['mean_count']:.4f} vs {1 / lam:.4f} (z {r.statistic:.2f})" for lam, r in rows)
    verdict(9, ok, f"spot count per unit window, {parts}, {dt:.1f}s (<60s)")


def test_criterion_10_meeting_monte_carlo(verdict):
    pairs = [(2, 1), (2, 2), (2, 5), (4, 4), (6, 20), (10, 50)]
    rep, dt = timed(estimators.meeting_probability_check, 32, pairs, 100_000, SEED)
    verdict("10a", rep.passed and dt < 30, f"meeting MC vs DP oracle on 6 pairs, worst z {rep.statistic:.2f}, {dt:.2f}s (<30s)")


def test_criterion_10_oracle_d2_t1(verdict):
    got = Fraction(estimators.meeting_probability_oracle(0, 2, 1)).limit_denominator(1 << 20)
    verdict("10b", got == Fraction(1, 4), f"oracle d=2 t=1 is {got} (expected 1/4)")


def test_criterion_10_oracle_d2_t2(verdict):
    got = Fraction(estimators.meeting_probability_oracle(0, 2, 2)).limit_denominator(1 << 20)
    verdict("10c", got == Fraction(7, 16), f"oracle d=2 t=2 is {got} (stated target 7/16)")


def test_criterion_11_blacknoise_trend(verdict):
    grid = [2.0**-k for k in range(12, 7, -1)]
    start = time.perf_counter()
    arratia = estimators.blacknoise_variance_scan(grid, 4000, SEED)
    control = estimators.blacknoise_variance_scan(grid, 4000, SEED, model="translation")
    rep = estimators.blacknoise_report(arratia, control)
    dt = time.perf_counter() - start
    ratios = ", ".join(f"{r:.4f}" for r in arratia.ratios)
    cratios = ", ".join(f"{r:.3f}" for r in control.ratios)
    verdict(11, rep.passed,
            f"Arratia var/eps [{ratios}] strictly decreasing, control [{cratios}] not, {dt:.1f}s")


def test_criterion_12_circle_flow(verdict):
    rep, dt = timed(estimators.circle_flow_tests, 1e-6, 100_000, SEED)
    d = rep.details
    verdict(12, rep.passed and dt < 60,
            f"chi2 p {rep.statistic:.3f} (>0.01), max corr z {d['max_corr_z']:.2f} (<=3), {dt:.2f}s (<60s)")


def test_criterion_13_enumeration_vs_chaos(verdict):
    res = checks.enumeration_vs_chaos(trials=60)
    verdict(13, res.passed, f"enumeration vs spectral form, max err {res.detail['max_error']:.2e} (<=1e-12)")
