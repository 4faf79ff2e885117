import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from flownoise import estimators as est


def schema(name):
    return json.loads(resources.files("flownoise").joinpath("schemas", name).read_text())


def test_meeting_oracle_small_cases():
    assert est.meeting_probability_oracle(0, 2, 1) == 0.25
    # after one step the difference is 0, 2 or 4 with probs 1/4, 1/2, 1/4;
    # only the middle case can meet on the second step
    assert est.meeting_probability_oracle(0, 2, 2) == pytest.approx(0.25 + 0.5 * 0.25)
    assert est.meeting_probability_oracle(0, 2, 2, m=4) == pytest.approx(0.5 + 0.5 * 0.5)
    assert est.meeting_probability_oracle(3, 7, 50) < 1


@pytest.mark.parametrize("args", [(0, 1, 3), (2, 2, 3), (0, 2, 0)])
def test_meeting_oracle_preconditions(args):
    with pytest.raises(ValueError):
        est.meeting_probability_oracle(*args)


def test_meeting_monte_carlo_agrees_with_oracle():
    r = est.meeting_probability_check(16, [(2, 1), (2, 3), (4, 10)], 20_000, 4)
    assert r.passed, r.details


def test_line_distance_is_martingale():
    np.testing.assert_allclose(est.line_distance_oracle(4, 25), 4.0, atol=1e-12)


def test_circle_distance_supermartingale():
    r = est.distance_supermartingale_check(12, (0, 6), 60, 5000, 2)
    assert r.passed
    assert r.details["means"][0] == 6
    assert r.details["slope"] < 0


def test_sticky_convolution():
    r = est.sticky_convolution_check(0.2, 0.5, 1.5, 100_000, 9)
    assert r.passed, r.details
    jsonschema.validate(r.to_json_obj(), schema("report.schema.json"))


def test_sticky_atom_grows_with_lambda():
    atoms = [est.sticky_convolution_check(0.2, 0.5, lam, 100_000, 1).details["atom_direct"] for lam in (0.2, 0.5, 1)]
    assert atoms[0] < atoms[1] < atoms[2]


def test_ks_requires_enough_samples():
    with pytest.raises(ValueError):
        est.ks_two_sample(np.zeros(100), np.zeros(100))


def test_snake_fast_matches_direct_composition():
    rng = np.random.default_rng(0)
    for _ in range(300):
        codes = rng.integers(0, 3, size=int(rng.integers(1, 60)))
        occ, cov = est.snake_spots_fast(codes, 70)
        assert est.snake_spots_direct(codes) == {int(j) + 1 for j in np.flatnonzero(occ[0])}
        assert not occ[0][~cov[0]].any()


def test_snake_spot_rate_and_scaling():
    a = est.snake_spot_statistics(1.0, 1 / 16, 16_384, 3, replicas=1000)
    b = est.snake_spot_statistics(2.0, 1 / 16, 16_384, 4, replicas=1000)
    assert a.passed and b.passed
    half = a.details["mean_count"] / 2
    se = np.hypot(a.details["std_error"] / 2, b.details["std_error"])
    assert abs(b.details["mean_count"] - half) <= 3 * se


def test_snake_window_must_fit_lattice():
    with pytest.raises(ValueError):
        est.snake_spot_statistics(1.0, 0.1, 100, 0, replicas=10, window=1.0)


def test_blacknoise_scan_preconditions_and_constant_phi():
    m = 32
    grid = [2.0**-8, 2.0**-6]
    flat = est.blacknoise_variance_scan(grid, 200, 1, m=m, phi=np.ones(m))
    assert flat.variances == [0.0, 0.0]
    with pytest.raises(ValueError):
        est.blacknoise_variance_scan([2.0**-12], 200, 1, m=m)
    point = np.zeros(m)
    point[3] = 1.0
    with pytest.raises(ValueError):
        est.blacknoise_variance_scan(grid, 200, 1, m=m, nu=point)


def test_blacknoise_ratio_shrinks_for_arratia_not_for_translation():
    grid = [2.0**-k for k in range(12, 7, -1)]
    a = est.blacknoise_variance_scan(grid, 1500, 5, m=256)
    c = est.blacknoise_variance_scan(grid, 1500, 5, m=256, model="translation")
    assert a.strictly_decreasing()
    assert min(c.ratios) / max(c.ratios) > 0.5
    rep = est.blacknoise_report(a, c)
    assert rep.passed
    jsonschema.validate(rep.to_json_obj(), schema("report.schema.json"))


def test_blacknoise_scan_is_seed_deterministic():
    grid = [2.0**-8, 2.0**-6]
    one = est.blacknoise_variance_scan(grid, 300, 8, m=32, threads=1)
    two = est.blacknoise_variance_scan(grid, 300, 8, m=32, threads=3)
    assert one == two


def test_circle_flow_uniform_and_control():
    good = est.circle_flow_tests(1e-6, 50_000, 3)
    assert good.passed, good.details
    # the frozen flow at eps = 0.9 has log-variance ln(1/0.9): far from uniform
    bad = est.circle_flow_tests(0.9, 50_000, 3)
    assert not bad.passed and bad.statistic < 1e-10
