import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import gamma

from flownoise import sticky_exact as se

EPS = (0.05, 0.1, 0.3, 0.5, 0.9)


@pytest.mark.parametrize("eps", EPS)
def test_alpha_beta_small_values(eps):
    assert se.alpha(0, eps) == pytest.approx(1.0)
    assert se.beta_fn(0, eps) == pytest.approx(1.0)
    assert se.alpha(1, eps) == pytest.approx(eps)
    assert se.beta_fn(1, eps) == pytest.approx(2 * eps)
    assert se.beta_fn(2, eps) == pytest.approx(eps * (1 + 2 * eps))


@pytest.mark.parametrize("eps", EPS)
def test_alpha_is_rising_product(eps):
    for k in range(8):
        prod = math.prod((eps + j) / (j + 1) for j in range(k))
        assert se.alpha(k, eps) == pytest.approx(prod, rel=1e-12)
        assert se.alpha(k, eps) == pytest.approx(gamma(k + eps) / (math.factorial(k) * gamma(eps)), rel=1e-10)


@pytest.mark.parametrize("eps", EPS)
def test_beta_moment_identity(eps):
    for n in range(9):
        for k in range(n + 1):
            lhs, rhs, err = se.beta_moment_identity(n, k, eps)
            assert err <= 1e-10
    lhs, rhs, _ = se.beta_moment_identity(1, 0, eps)
    assert lhs == pytest.approx(0.5) and rhs == pytest.approx(0.5)
    lhs, _, _ = se.beta_moment_identity(2, 1, eps)
    assert lhs == pytest.approx(eps / (1 + 2 * eps))
    # k = n: E theta^n as a telescoping product
    tele = math.prod((eps + j) / (2 * eps + j) for j in range(6))
    assert se.beta_moment_identity(6, 6, eps)[0] == pytest.approx(tele, rel=1e-12)


def test_small_eps_does_not_underflow():
    assert se.beta_moment_identity(8, 3, 1e-6)[2] < 1e-10
    assert se.beta_fn(8, 1e-6) > 0


def test_invariant_measure_examples():
    eps = 0.3
    mu = se.invariant_measure(5, 1, eps)
    assert len(mu) == 5 and all(v == pytest.approx(0.2) for v in mu.values())
    mu = se.invariant_measure(4, 2, eps)
    assert sum(mu.values()) == pytest.approx(1.0)
    ratio = mu[se.OccupationConfig((2, 0, 0, 0))] / mu[se.OccupationConfig((1, 1, 0, 0))]
    assert ratio == pytest.approx((1 + 2 * eps) / (4 * eps))


def test_channel_probabilities():
    eps = 0.2
    one = se.OccupationConfig((0, 1, 0, 0))
    chans = list(se.channels(one))
    assert len(chans) == 2 and all(se.channel_probability(one, c, eps) == pytest.approx(0.5) for c in chans)
    pile = se.OccupationConfig((3, 0, 0, 0))
    right = se.ChannelFlow((3, 0, 0, 0), (0, 0, 0, 0))
    assert se.channel_probability(pile, right, eps) == pytest.approx(se.alpha(3, eps) / se.beta_fn(3, eps))
    rng = np.random.default_rng(0)
    for _ in range(10):
        src = se.OccupationConfig(tuple(rng.integers(0, 3, size=5)))
        assert sum(se.channel_probability(src, c, eps) for c in se.channels(src)) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        se.channel_probability(one, right, eps)


def test_channel_probability_matches_beta_coin_monte_carlo():
    eps = 0.4
    src = se.OccupationConfig((2, 0, 1))
    ch = se.ChannelFlow((1, 0, 1), (1, 0, 0))
    rng = np.random.default_rng(2)
    th = rng.beta(eps, eps, size=(400_000, 3))
    # two at site 0 split one/one, the one at site 2 goes right
    p = np.mean(2 * th[:, 0] * (1 - th[:, 0]) * th[:, 2])
    assert se.channel_probability(src, ch, eps) == pytest.approx(p, rel=0.02)


@pytest.mark.parametrize("m,n", [(3, 1), (3, 4), (4, 2), (5, 3)])
def test_detailed_balance_report(m, n):
    r = se.check_detailed_balance(m, n, 0.25)
    assert r.max_violation <= 1e-10
    assert r.stationarity_error <= 1e-10 and r.max_row_sum_error <= 1e-10
    assert set(r.to_json_obj()) >= {"m", "n", "eps", "max_violation", "worst_channel"}


def test_reversed_channel_round_trip():
    ch = se.ChannelFlow((1, 0, 2, 0), (0, 1, 1, 3))
    assert ch.reversed().source() == ch.target()
    assert ch.reversed().target() == ch.source()
    assert ch.reversed().reversed() == ch


def test_enumeration_cap_and_domain():
    with pytest.raises(ValueError):
        se.configurations(2, 3)
    with pytest.raises(ValueError):
        se.configurations(20, 12)
    with pytest.raises(ValueError):
        se.alpha(-1, 0.5)
    with pytest.raises(ValueError):
        se.beta_fn(2, 1.0)


def test_tagged_particle_is_simple_random_walk():
    path = se.simulate_sticky_lattice(7, 3, 0.3, 200, 1, start=[0, 0, 3], replicas=200)
    steps = (np.diff(path[:, :, 0], axis=1) % 7).ravel()
    right = int((steps == 1).sum())
    assert stats.binomtest(right, steps.size, 0.5).pvalue > 0.001


def test_coin_law_gives_coalescing_walks():
    path = se.simulate_sticky_lattice(6, 2, 0.5, 300, 3, start=[0, 2], replicas=300, theta_law="coin")
    met = path[:, :, 0] == path[:, :, 1]
    for r in range(300):
        if met[r].any():
            assert met[r, met[r].argmax():].all()


def test_occupancy_matches_invariant_measure():
    assert se.empirical_tv(4, 3, 0.25, 100, 10_000, 1) <= 0.02
    assert se.empirical_tv(5, 3, 0.25, 100, 10_000, 2, start="concentrated", burn_in=40) <= 0.02
