"""Exact L2 analysis on finite product probability spaces.

A random variable is a dense complex tensor with one axis per independent
factor.  Subsets of factors are bitmasks (bit ``t`` set means factor ``t`` is
in the subset).  For each subset ``C`` the chaos component ``Q_C f`` is
centred in every factor of ``C`` and constant in every other factor; the
spectral measure puts weight ``||Q_C f||^2`` on ``C``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "MAX_ENTRIES",
    "FiniteProductSpace",
    "RandomVariable",
    "ChaosDecomposition",
    "SpectralMeasure",
    "NotDecomposableError",
    "factor_variable",
    "decompose",
    "spectral_measure",
    "apply_Urho",
    "urho_form",
    "exp_map",
    "log_map",
    "subset_members",
    "zm_toy_space",
    "zm_toy_character",
]

MAX_ENTRIES = 2**24
MAX_FACTORS = 63


class NotDecomposableError(ValueError):
    """The variable is not a product of one-factor terms with unit mean."""


@dataclass(frozen=True)
class FiniteProductSpace:
    """Ordered independent factors, each a probability vector over its atoms."""

    probs: tuple
    labels: tuple = ()

    def __post_init__(self):
        probs = tuple(np.asarray(p, dtype=float) for p in self.probs)
        if not probs:
            raise ValueError("need at least one factor")
        if len(probs) > MAX_FACTORS:
            raise ValueError(f"at most {MAX_FACTORS} factors")
        for t, p in enumerate(probs):
            if p.ndim != 1 or p.size < 1 or (p <= 0).any() or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"factor {t}: probabilities must be positive and sum to 1")
        if int(np.prod([p.size for p in probs], dtype=float)) > MAX_ENTRIES:
            raise ValueError(f"tensor would exceed {MAX_ENTRIES} entries")
        labels = tuple(self.labels) or tuple(str(t) for t in range(len(probs)))
        if len(labels) != len(probs):
            raise ValueError("one label per factor")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @property
    def n_factors(self) -> int:
        return len(self.probs)

    @property
    def shape(self) -> tuple:
        return tuple(p.size for p in self.probs)

    def _weights(self, t):
        shape = [1] * self.n_factors
        shape[t] = self.probs[t].size
        return self.probs[t].reshape(shape)

    def average(self, values, t: int):
        """Integrate out factor ``t`` (result keeps the axis with length 1)."""
        return np.sum(values * self._weights(t), axis=t, keepdims=True)

    def expectation(self, values) -> complex:
        out = values
        for t in range(self.n_factors):
            out = self.average(out, t)
        return out.reshape(()).item()

    def conditional_expectation(self, values, keep):
        """``E[f | factors in keep]`` broadcast back to the full shape."""
        keep = set(keep)
        out = values
        for t in range(self.n_factors):
            if t not in keep:
                out = self.average(out, t)
        return np.broadcast_to(out, self.shape).copy()


@dataclass(frozen=True, eq=False)
class RandomVariable:
    space: FiniteProductSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.space.shape:
            raise ValueError(f"values shape {v.shape} != space shape {self.space.shape}")
        object.__setattr__(self, "values", v)

    def mean(self) -> complex:
        return self.space.expectation(self.values)

    def inner(self, other: "RandomVariable") -> complex:
        return self.space.expectation(self.values * np.conj(other.values))

    def norm2(self) -> float:
        return float(self.space.expectation(np.abs(self.values) ** 2).real)

    def __add__(self, other):
        return RandomVariable(self.space, self.values + other.values)

    def __mul__(self, other):
        if isinstance(other, RandomVariable):
            return RandomVariable(self.space, self.values * other.values)
        return RandomVariable(self.space, self.values * other)


def factor_variable(space: FiniteProductSpace, t: int, values) -> RandomVariable:
    """A random variable that depends on factor ``t`` only."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (space.shape[t],):
        raise ValueError(f"factor {t} has {space.shape[t]} atoms, got {values.shape}")
    shape = [1] * space.n_factors
    shape[t] = values.size
    return RandomVariable(space, np.broadcast_to(values.reshape(shape), space.shape))


def subset_members(mask: int) -> list[int]:
    return [t for t in range(mask.bit_length()) if mask >> t & 1]


@dataclass
class ChaosDecomposition:
    components: dict = field(default_factory=dict)

    def total(self) -> RandomVariable:
        comps = list(self.components.values())
        out = comps[0].values.copy()
        for c in comps[1:]:
            out += c.values
        return RandomVariable(comps[0].space, out)


def decompose(f: RandomVariable, max_factors: int = 16) -> ChaosDecomposition:
    """All chaos components ``Q_C f`` (dense; ``2^n`` tensors)."""
    space = f.space
    n = space.n_factors
    if n > max_factors:
        raise ValueError(f"decompose keeps 2^{n} tensors; limit is {max_factors} factors")
    # walk factors once, splitting every partial result into mean and centred parts
    parts = {0: f.values}
    for t in range(n):
        nxt = {}
        for mask, v in parts.items():
            mean = np.broadcast_to(space.average(v, t), space.shape)
            nxt[mask] = mean
            nxt[mask | 1 << t] = v - mean
        parts = nxt
    return ChaosDecomposition({mask: RandomVariable(space, v) for mask, v in sorted(parts.items())})


@dataclass
class SpectralMeasure:
    """Weights ``||Q_C f||^2`` keyed by subset bitmask."""

    weights: dict
    n_factors: int
    labels: tuple = ()

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def normalized(self) -> "SpectralMeasure":
        z = self.total()
        return SpectralMeasure({k: w / z for k, w in self.weights.items()}, self.n_factors, self.labels)

    def inclusion_probability(self, t: int) -> float:
        """Mass of subsets containing factor ``t``, relative to the total."""
        z = self.total()
        return sum(w for k, w in self.weights.items() if k >> t & 1) / z

    def to_json_obj(self) -> dict:
        return {
            "n_factors": self.n_factors,
            "factor_labels": list(self.labels),
            "total_mass": self.total(),
            "weights": [
                {"subset": subset_members(k), "weight": w} for k, w in sorted(self.weights.items())
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_obj(), **kw)


def _orthonormal_basis(p: np.ndarray) -> np.ndarray:
    """Matrix ``M`` with ``M @ u`` = coordinates of ``u`` in an L2(p) basis whose
    first vector is the constant 1."""
    k = p.size
    root = np.sqrt(p)
    q, _ = np.linalg.qr(np.column_stack([root, np.eye(k)[:, : k - 1]]) if k > 1 else root[:, None])
    if q[:, 0] @ root < 0:
        q[:, 0] = -q[:, 0]
    return q.T * root


def spectral_measure(f: RandomVariable) -> SpectralMeasure:
    """Spectral measure of ``f`` in one pass.

    Each axis is rotated into an orthonormal basis of its factor's L2 whose
    first element is the constant; a coefficient then belongs to the subset of
    axes where its basis index is non-zero.
    """
    space = f.space
    coef = f.values
    for t, p in enumerate(space.probs):
        coef = np.moveaxis(np.tensordot(_orthonormal_basis(p), coef, axes=([1], [t])), 0, t)
    pattern = np.zeros(space.shape, dtype=np.int64)
    for t in range(space.n_factors):
        shape = [1] * space.n_factors
        shape[t] = space.shape[t]
        nz = (np.arange(space.shape[t]) > 0).astype(np.int64).reshape(shape)
        pattern = pattern | (nz << t)
    weights = np.bincount(pattern.ravel(), weights=np.abs(coef.ravel()) ** 2, minlength=1)
    return SpectralMeasure(
        {k: float(w) for k, w in enumerate(weights) if w != 0.0 or k == 0},
        space.n_factors,
        space.labels,
    )


def apply_Urho(f: RandomVariable, rho: float) -> RandomVariable:
    """``sum_C rho^|C| Q_C f``, computed factor by factor as ``rho I + (1 - rho) E_t``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho!r}")
    space = f.space
    v = f.values
    for t in range(space.n_factors):
        v = rho * v + (1.0 - rho) * space.average(v, t)
    return RandomVariable(space, v)


def urho_form(f: RandomVariable, rho: float) -> float:
    """``<U^rho f, f>`` summed over the spectral measure."""
    mu = spectral_measure(f)
    return float(sum(rho ** bin(k).count("1") * w for k, w in mu.weights.items()))


def _factor_values(g: RandomVariable, t: int) -> np.ndarray:
    """One-factor values of ``g``; raises if ``g`` depends on another factor."""
    space = g.space
    idx = tuple(slice(None) if s == t else 0 for s in range(space.n_factors))
    vals = g.values[idx]
    if not np.allclose(factor_variable(space, t, vals).values, g.values, atol=1e-12, rtol=0):
        raise ValueError(f"component {t} depends on factors other than {t}")
    return vals


def exp_map(g_components: Sequence[RandomVariable]) -> RandomVariable:
    """``prod_t (1 + g_t)`` for centred one-factor variables ``g_t``."""
    if not g_components:
        raise ValueError("need one component per factor")
    space = g_components[0].space
    if len(g_components) != space.n_factors:
        raise ValueError(f"need {space.n_factors} components, got {len(g_components)}")
    out = np.ones(space.shape, dtype=complex)
    for t, g in enumerate(g_components):
        vals = _factor_values(g, t)
        if abs(np.dot(space.probs[t], vals)) > 1e-12 * (1 + np.abs(vals).max()):
            raise ValueError(f"component {t} is not centred")
        out = out * factor_variable(space, t, 1.0 + vals).values
    return RandomVariable(space, out)


def log_map(f: RandomVariable, tol: float = 1e-10) -> list[RandomVariable]:
    """Inverse of ``exp_map``: ``g_t = E[f | factor t] - 1``.

    The candidate factors are checked by rebuilding ``f``; anything that is not
    a unit-mean product of one-factor terms raises ``NotDecomposableError``.
    """
    space = f.space
    mean = f.mean()
    if abs(mean - 1.0) > tol:
        raise NotDecomposableError(f"E f = {mean:.6g}, expected 1")
    gs = [
        RandomVariable(space, space.conditional_expectation(f.values, [t]) - 1.0)
        for t in range(space.n_factors)
    ]
    rebuilt = exp_map(gs)
    err = np.abs(rebuilt.values - f.values).max()
    if err > tol * (1.0 + np.abs(f.values).max()):
        raise NotDecomposableError(f"product of one-factor terms misses f by {err:.3g}")
    return gs


def zm_toy_space(m: int, n_steps: int) -> FiniteProductSpace:
    """``n_steps`` fair 0/1 increments followed by a uniform tail on Z_m."""
    probs = [np.array([0.5, 0.5])] * n_steps + [np.full(m, 1.0 / m)]
    labels = [str(t) for t in range(n_steps)] + ["tail"]
    return FiniteProductSpace(tuple(probs), tuple(labels))


def zm_toy_character(m: int, n_steps: int, k: int = 1) -> RandomVariable:
    """``exp(2 pi i k X[0, inf] / m)`` where ``X[0, inf]`` is the sum of all factors."""
    space = zm_toy_space(m, n_steps)
    total = np.zeros(space.shape, dtype=np.int64)
    for t, size in enumerate(space.shape):
        shape = [1] * space.n_factors
        shape[t] = size
        total = total + np.arange(size).reshape(shape)
    return RandomVariable(space, np.exp(2j * np.pi * k * (total % m) / m))
