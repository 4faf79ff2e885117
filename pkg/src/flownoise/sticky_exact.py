"""Exact algebra of the Beta-coin sticky lattice flow on Z_m.

At each time step every site ``x`` draws ``theta[x] ~ Beta(eps, eps)``; given
the coins, each particle at ``x`` steps to ``x + 1`` with probability
``theta[x]`` and to ``x - 1`` otherwise, independently of the others.

With ``alpha(k) = Gamma(k + eps) / (k! Gamma(eps))`` and
``beta(n) = Gamma(n + 2 eps) / (n! Gamma(2 eps))`` the split probabilities
factor as ``alpha(k) alpha(n - k) / beta(n)``, the product of ``beta`` over
sites is invariant, and every transition channel is reversible on its own.
Everything here is computed in log space.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from .flows import sample_beta_symmetric
from .streams import as_generator

__all__ = [
    "MAX_STATES",
    "OccupationConfig",
    "ChannelFlow",
    "log_alpha",
    "log_beta_fn",
    "alpha",
    "beta_fn",
    "beta_moment_identity",
    "configurations",
    "invariant_measure",
    "channels",
    "channel_probability",
    "transition_matrix",
    "check_detailed_balance",
    "DetailedBalanceReport",
    "simulate_sticky_lattice",
    "occupation",
    "sample_invariant",
    "empirical_tv",
]

MAX_STATES = 100_000


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")


def log_alpha(k, eps):
    _check_eps(eps)
    k = np.asarray(k, dtype=float)
    return gammaln(k + eps) - gammaln(k + 1.0) - gammaln(eps)


def log_beta_fn(n, eps):
    _check_eps(eps)
    n = np.asarray(n, dtype=float)
    return gammaln(n + 2.0 * eps) - gammaln(n + 1.0) - gammaln(2.0 * eps)


def alpha(k: int, eps: float) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(np.exp(log_alpha(k, eps)))


def beta_fn(n: int, eps: float) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(np.exp(log_beta_fn(n, eps)))


def beta_moment_identity(n: int, k: int, eps: float) -> tuple[float, float, float]:
    """Both sides of ``C(n, k) E[theta^k (1-theta)^(n-k)] = alpha(k) alpha(n-k) / beta(n)``.

    The left side uses the Beta-function moment formula, the right side the
    alpha/beta products.  Returns ``(lhs, rhs, relative error)``.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    _check_eps(eps)
    log_binom = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    log_lhs = log_binom + betaln(k + eps, n - k + eps) - betaln(eps, eps)
    log_rhs = log_alpha(k, eps) + log_alpha(n - k, eps) - log_beta_fn(n, eps)
    lhs, rhs = math.exp(log_lhs), math.exp(float(log_rhs))
    return lhs, rhs, abs(math.expm1(log_lhs - float(log_rhs)))


@dataclass(frozen=True)
class OccupationConfig:
    """Particle counts ``s[x]`` on the sites of Z_m."""

    s: tuple

    def __post_init__(self):
        s = tuple(int(v) for v in self.s)
        if len(s) < 1 or any(v < 0 for v in s):
            raise ValueError("occupation numbers must be non-negative")
        object.__setattr__(self, "s", s)

    @property
    def m(self) -> int:
        return len(self.s)

    @property
    def n(self) -> int:
        return sum(self.s)


@dataclass(frozen=True)
class ChannelFlow:
    """Edge occupation numbers: ``right[x]`` particles go x -> x+1, ``left[x]`` go x -> x-1."""

    right: tuple
    left: tuple

    def source(self) -> OccupationConfig:
        return OccupationConfig(tuple(r + l for r, l in zip(self.right, self.left)))

    def target(self) -> OccupationConfig:
        m = len(self.right)
        return OccupationConfig(
            tuple(self.right[(x - 1) % m] + self.left[(x + 1) % m] for x in range(m))
        )

    def reversed(self) -> "ChannelFlow":
        """The same edges traversed backwards, read from the target configuration."""
        m = len(self.right)
        return ChannelFlow(
            tuple(self.left[(x + 1) % m] for x in range(m)),
            tuple(self.right[(x - 1) % m] for x in range(m)),
        )


def _count_states(m, n):
    return math.comb(n + m - 1, m - 1)


def configurations(m: int, n: int) -> list[OccupationConfig]:
    """All configurations of ``n`` unlabelled particles on ``m`` sites."""
    if m < 3:
        raise ValueError("need m >= 3 so that the two neighbours of a site differ")
    if n < 1:
        raise ValueError("need n >= 1")
    if _count_states(m, n) > MAX_STATES:
        raise ValueError(f"{_count_states(m, n)} states exceed the cap {MAX_STATES}")
    out = []
    for bars in itertools.combinations(range(n + m - 1), m - 1):
        cuts = (-1,) + bars + (n + m - 1,)
        out.append(OccupationConfig(tuple(cuts[i + 1] - cuts[i] - 1 for i in range(m))))
    return out


def _log_weight(config: OccupationConfig, eps) -> float:
    return float(np.sum(log_beta_fn(np.array(config.s), eps)))


def invariant_measure(m: int, n: int, eps: float) -> dict:
    """Normalised ``prod_x beta(s_x)`` over all n-particle configurations."""
    _check_eps(eps)
    states = configurations(m, n)
    logw = np.array([_log_weight(c, eps) for c in states])
    w = np.exp(logw - logw.max())
    w /= w.sum()
    return dict(zip(states, w.tolist()))


def channels(source: OccupationConfig):
    """Every channel out of ``source`` (each site splits its particles left/right)."""
    for right in itertools.product(*(range(v + 1) for v in source.s)):
        yield ChannelFlow(tuple(right), tuple(v - r for v, r in zip(source.s, right)))


def _log_channel(channel: ChannelFlow, eps) -> float:
    src = np.array(channel.source().s)
    return float(
        np.sum(log_alpha(np.array(channel.right), eps))
        + np.sum(log_alpha(np.array(channel.left), eps))
        - np.sum(log_beta_fn(src, eps))
    )


def channel_probability(source: OccupationConfig, channel: ChannelFlow, eps: float) -> float:
    """``prod_x alpha(right[x]) alpha(left[x]) / beta(s[x])``."""
    _check_eps(eps)
    if channel.source() != source:
        raise ValueError("channel does not start from the given configuration")
    return math.exp(_log_channel(channel, eps))


def transition_matrix(m: int, n: int, eps: float):
    """Full kernel on configurations, summing channel probabilities per target."""
    states = configurations(m, n)
    index = {c: i for i, c in enumerate(states)}
    p = np.zeros((len(states), len(states)))
    for i, src in enumerate(states):
        for ch in channels(src):
            p[i, index[ch.target()]] += math.exp(_log_channel(ch, eps))
    return states, p


@dataclass
class DetailedBalanceReport:
    m: int
    n: int
    eps: float
    max_violation: float
    worst_channel: dict | None
    stationarity_error: float
    max_row_sum_error: float
    symmetric_weight_error: float

    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "eps": self.eps,
            "max_violation": self.max_violation,
            "worst_channel": self.worst_channel,
            "stationarity_error": self.stationarity_error,
            "max_row_sum_error": self.max_row_sum_error,
            "symmetric_weight_error": self.symmetric_weight_error,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_obj(), **kw)


def check_detailed_balance(m: int, n: int, eps: float) -> DetailedBalanceReport:
    """Compare ``mu(s') p_channel(s' -> s'')`` with the reversed channel, everywhere.

    Also reports ``max |mu P - mu| / max mu`` for the full kernel, the largest
    deviation of a row sum from one, and how far the channel weight is from the
    edge-count product ``prod alpha(edges)`` (normalised by the same constant).
    """
    _check_eps(eps)
    mu = invariant_measure(m, n, eps)
    states = list(mu)
    index = {c: i for i, c in enumerate(states)}
    log_z = math.log(sum(math.exp(_log_weight(c, eps)) for c in states))
    p = np.zeros((len(states), len(states)))
    worst, worst_ch, sym_err = 0.0, None, 0.0
    for i, src in enumerate(states):
        for ch in channels(src):
            lp = _log_channel(ch, eps)
            p[i, index[ch.target()]] += math.exp(lp)
            fwd = mu[src] * math.exp(lp)
            rev_ch = ch.reversed()
            tgt = ch.target()
            bwd = mu[tgt] * math.exp(_log_channel(rev_ch, eps))
            viol = abs(fwd - bwd) / max(fwd, bwd)
            if viol > worst or worst_ch is None:
                worst = max(worst, viol)
                worst_ch = {"source": list(src.s), "right": list(ch.right), "left": list(ch.left)}
            edges = float(
                np.sum(log_alpha(np.array(ch.right), eps)) + np.sum(log_alpha(np.array(ch.left), eps))
            )
            sym_err = max(sym_err, abs(math.expm1(math.log(fwd) - (edges - log_z))))
    mu_vec = np.array([mu[c] for c in states])
    stat = float(np.abs(mu_vec @ p - mu_vec).max() / mu_vec.max())
    rows = float(np.abs(p.sum(axis=1) - 1.0).max())
    return DetailedBalanceReport(m, n, eps, worst, worst_ch, stat, rows, sym_err)


def occupation(positions, m: int) -> np.ndarray:
    """Occupation numbers from particle positions (last axis = particles)."""
    positions = np.asarray(positions)
    flat = positions.reshape(-1, positions.shape[-1])
    occ = np.zeros((flat.shape[0], m), dtype=np.int64)
    rows = np.repeat(np.arange(flat.shape[0]), flat.shape[1])
    np.add.at(occ, (rows, flat.ravel()), 1)
    return occ.reshape(positions.shape[:-1] + (m,))


def simulate_sticky_lattice(
    m: int,
    n_particles: int,
    eps: float,
    steps: int,
    rng,
    start=None,
    replicas: int = 1,
    theta_law: str = "beta",
) -> np.ndarray:
    """Particle positions, shape ``(replicas, steps + 1, n_particles)``.

    ``start`` is an array of positions broadcastable to ``(replicas, n)``
    (default: all particles at site 0).  ``theta_law='coin'`` replaces the
    Beta coins with fair 0/1 coins, which turns the model into coalescing
    walks.
    """
    if m < 3:
        raise ValueError("need m >= 3")
    _check_eps(eps)
    if theta_law not in ("beta", "coin"):
        raise ValueError(f"unknown theta law {theta_law!r}")
    rng = as_generator(rng)
    if start is None:
        start = np.zeros(n_particles, dtype=np.int64)
    pos = np.broadcast_to(np.asarray(start, dtype=np.int64), (replicas, n_particles)) % m
    out = np.empty((replicas, steps + 1, n_particles), dtype=np.int64)
    out[:, 0] = pos
    rows = np.arange(replicas)[:, None]
    for t in range(steps):
        if theta_law == "beta":
            theta = sample_beta_symmetric(eps, (replicas, m), rng)
        else:
            theta = rng.integers(0, 2, size=(replicas, m)).astype(float)
        right = rng.random((replicas, n_particles)) < theta[rows, pos]
        pos = (pos + np.where(right, 1, -1)) % m
        out[:, t + 1] = pos
    return out


def sample_invariant(m: int, n: int, eps: float, size: int, rng) -> np.ndarray:
    """Particle positions (shape ``(size, n)``) of configurations drawn from ``mu_n``."""
    mu = invariant_measure(m, n, eps)
    states = list(mu)
    rng = as_generator(rng)
    pick = rng.choice(len(states), size=size, p=np.array(list(mu.values())))
    return np.array([np.repeat(np.arange(m), states[i].s) for i in pick], dtype=np.int64)


def empirical_tv(
    m: int,
    n: int,
    eps: float,
    steps: int,
    replicas: int,
    rng,
    start: str = "stationary",
    burn_in: int = 0,
) -> float:
    """Total variation between the time-averaged occupancy law of simulated
    chains and ``mu_n``.

    ``start='stationary'`` draws the initial configurations from ``mu_n``
    (needed for even ``m``, where the chain is periodic: the parity of the
    particle-position sum flips every step).  ``start='concentrated'`` puts
    every particle on site 0.
    """
    rng = as_generator(rng)
    if start == "stationary":
        init = sample_invariant(m, n, eps, replicas, rng)
    elif start == "concentrated":
        init = np.zeros(n, dtype=np.int64)
    else:
        raise ValueError(f"unknown start {start!r}")
    path = simulate_sticky_lattice(m, n, eps, steps, rng, start=init, replicas=replicas)
    occ = occupation(path[:, burn_in + 1 :], m).reshape(-1, m)
    mu = invariant_measure(m, n, eps)
    index = {c.s: i for i, c in enumerate(mu)}
    codes = np.array([index[tuple(row)] for row in map(tuple, occ.tolist())])
    freq = np.bincount(codes, minlength=len(mu)) / codes.size
    return float(0.5 * np.abs(freq - np.array(list(mu.values()))).sum())
