import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flownoise import chaos


def random_variable(seed, atoms=(2, 3, 2, 4)):
    rng = np.random.default_rng(seed)
    probs = tuple(rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k for k in atoms)
    space = chaos.FiniteProductSpace(probs)
    return chaos.RandomVariable(space, rng.normal(size=atoms) + 1j * rng.normal(size=atoms))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_components_are_orthogonal_and_sum_to_f(seed):
    f = random_variable(seed)
    dec = chaos.decompose(f)
    np.testing.assert_allclose(dec.total().values, f.values, atol=1e-12)
    comps = list(dec.components.values())
    for i in range(len(comps)):
        for j in range(i):
            assert abs(comps[i].inner(comps[j])) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_spectral_measure_matches_decomposition(seed):
    f = random_variable(seed)
    mu = chaos.spectral_measure(f)
    dec = chaos.decompose(f)
    for mask, comp in dec.components.items():
        assert mu.weights.get(mask, 0.0) == pytest.approx(comp.norm2(), abs=1e-12)
    assert mu.total() == pytest.approx(f.norm2(), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1))
def test_urho_operator_and_form_agree(seed, rho):
    f = random_variable(seed)
    direct = chaos.apply_Urho(f, rho).inner(f)
    assert direct.real == pytest.approx(chaos.urho_form(f, rho), abs=1e-12)
    assert abs(direct.imag) < 1e-12


def test_components_are_centred_in_their_factors():
    f = random_variable(1)
    for mask, comp in chaos.decompose(f).components.items():
        for t in chaos.subset_members(mask):
            assert np.abs(f.space.average(comp.values, t)).max() < 1e-12


def test_zm_toy_inclusion_probability():
    for m in (2, 3, 4, 6):
        mu = chaos.spectral_measure(chaos.zm_toy_character(m, 5))
        for t in range(5):
            assert mu.inclusion_probability(t) == pytest.approx(math.sin(math.pi / m) ** 2, abs=1e-12)
        assert mu.inclusion_probability(5) == pytest.approx(1.0)


def test_m2_character_lives_in_top_chaos():
    mu = chaos.spectral_measure(chaos.zm_toy_character(2, 7))
    assert mu.weights[(1 << 8) - 1] == pytest.approx(1.0)
    assert sum(w for k, w in mu.weights.items() if k != (1 << 8) - 1) < 1e-12


def test_exp_log_round_trip():
    rng = np.random.default_rng(3)
    space = chaos.FiniteProductSpace((np.array([0.3, 0.7]), np.array([0.2, 0.5, 0.3]), np.array([0.5, 0.5])))
    gs = []
    for t, p in enumerate(space.probs):
        v = rng.normal(size=p.size)
        gs.append(chaos.factor_variable(space, t, v - p @ v))
    f = chaos.exp_map(gs)
    assert f.mean() == pytest.approx(1.0)
    back = chaos.log_map(f)
    for g, h in zip(gs, back):
        np.testing.assert_allclose(g.values, h.values, atol=1e-12)


def test_log_rejects_non_products():
    space = chaos.FiniteProductSpace((np.array([0.5, 0.5]), np.array([0.5, 0.5])))
    x = np.array([[1.0, 0.0], [0.0, 3.0]])
    with pytest.raises(chaos.NotDecomposableError):
        chaos.log_map(chaos.RandomVariable(space, x))
    with pytest.raises(chaos.NotDecomposableError):
        chaos.log_map(chaos.RandomVariable(space, np.full((2, 2), 2.0)))


def test_exp_rejects_uncentred_or_mixed_components():
    space = chaos.FiniteProductSpace((np.array([0.5, 0.5]), np.array([0.5, 0.5])))
    ok = chaos.factor_variable(space, 1, [1.0, -1.0])
    with pytest.raises(ValueError):
        chaos.exp_map([chaos.factor_variable(space, 0, [1.0, 1.0]), ok])
    with pytest.raises(ValueError):
        chaos.exp_map([ok, ok])


def test_space_validation():
    with pytest.raises(ValueError):
        chaos.FiniteProductSpace((np.array([0.5, 0.6]),))
    with pytest.raises(ValueError):
        chaos.FiniteProductSpace((np.array([1.0, 0.0]),))
    with pytest.raises(ValueError):
        chaos.FiniteProductSpace(tuple([np.ones(16) / 16] * 7))
    with pytest.raises(ValueError):
        chaos.apply_Urho(random_variable(0), 1.2)


def test_json_shape():
    obj = chaos.spectral_measure(chaos.zm_toy_character(3, 2)).to_json_obj()
    assert obj["n_factors"] == 3 and obj["factor_labels"] == ["0", "1", "tail"]
    assert obj["total_mass"] == pytest.approx(1.0)
    assert {"subset", "weight"} <= set(obj["weights"][0])
