"""Discrete-time flows built from i.i.d. steps, n-point motions and exact samplers.

A flow is stored as its raw step data (signs, codes, coins or increment
parameters) with a leading step axis.  Batched Monte Carlo works on the same
raw arrays with an extra leading replica axis; ``FlowPath`` turns one row into
semigroup elements on demand.

Models
------
``zm-toy``          random walk increments 0/1 on Z_m plus a uniform tail (m)
``coal-lattice``    coalescing generators f_+, f_- on {0, 1, ...}
``split-lattice``   splitting generators on Z + 1/2 (points doubled)
``sticky-lattice``  f_-, f_+, f_* with Pr{f_*} = sqrt(dt) / (2 lam)  (lam, dt)
``arratia-lattice`` one random sign per site of Z_m per step (m)
``sticky-kernel``   Beta(eps, eps) site coins on Z_m, a flow of kernels (m, eps)
``coal``, ``split``, ``sticky``  exact continuum increments over pitch dt
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import semigroups as sg
from .streams import as_generator

__all__ = [
    "MODELS",
    "FlowPath",
    "Trajectory",
    "CircleFlowSample",
    "check_params",
    "sample_raw",
    "sample_step",
    "build_flow",
    "interval_product",
    "n_point_motion",
    "coal_increment_arrays",
    "sample_coal_increment",
    "sticky_increment_arrays",
    "sample_sticky_increment",
    "sample_beta_symmetric",
    "sample_circle_flow",
    "arratia_motion_batch",
    "write_trajectories_csv",
]


class _Model:
    name = ""
    kind = ""
    event_shape: tuple = ()
    has_tail = False

    def check(self, params: dict) -> dict:
        return dict(params)

    def sample(self, params, size, rng):
        raise NotImplementedError

    def element(self, params, raw):
        raise NotImplementedError

    def step_law(self, params):
        """Finite step law as ``(raw atoms, probabilities)``, or None."""
        return None

    def identity(self, params):
        return sg.identity(self.kind, params.get("m"))

    def contains(self, params, point) -> bool:
        return True


def _need(params, key, cond, msg):
    if key not in params:
        raise ValueError(f"missing parameter {key!r}")
    if not cond(params[key]):
        raise ValueError(f"parameter {key}={params[key]!r}: {msg}")


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _nonneg_int(p):
    return _is_int(p) and p >= 0


class _ZmToy(_Model):
    name, kind, has_tail = "zm-toy", "zm", True

    def check(self, params):
        _need(params, "m", lambda v: _is_int(v) and v >= 2, "need an integer m >= 2")
        return {"m": int(params["m"])}

    def sample(self, params, size, rng):
        return rng.integers(0, 2, size=size, dtype=np.int64)

    def sample_tail(self, params, size, rng):
        return rng.integers(0, params["m"], size=size, dtype=np.int64)

    def element(self, params, raw):
        return sg.ZmElem.of(params["m"], int(raw))

    def step_law(self, params):
        return np.array([0, 1]), np.array([0.5, 0.5])

    def tail_law(self, params):
        m = params["m"]
        return np.arange(m), np.full(m, 1.0 / m)

    def contains(self, params, point):
        return _is_int(point) and 0 <= point < params["m"]


class _CoalLattice(_Model):
    name, kind = "coal-lattice", "coal"
    _gens = sg.coal_generators()

    def sample(self, params, size, rng):
        return rng.integers(0, 2, size=size, dtype=np.int64) * 2 - 1

    def element(self, params, raw):
        return self._gens["+" if raw > 0 else "-"]

    def step_law(self, params):
        return np.array([1, -1]), np.array([0.5, 0.5])

    def contains(self, params, point):
        return _nonneg_int(point)


class _SplitLattice(_CoalLattice):
    name, kind = "split-lattice", "half-split"
    _gens = sg.half_split_generators()

    def contains(self, params, point):
        return _is_int(point) and point % 2 == 1


class _StickyLattice(_Model):
    name, kind = "sticky-lattice", "sticky"
    _codes = ("-", "+", "*")
    _gens = sg.sticky_generators()

    def check(self, params):
        _need(params, "lam", lambda v: v > 0, "need lam > 0")
        _need(params, "dt", lambda v: v > 0, "need dt > 0")
        q = math.sqrt(params["dt"]) / (2 * params["lam"])
        if q > 0.5:
            raise ValueError(f"dt={params['dt']} too large: Pr{{f_*}} = {q:.3g} exceeds 1/2")
        return {"lam": float(params["lam"]), "dt": float(params["dt"])}

    def probs(self, params):
        q = math.sqrt(params["dt"]) / (2 * params["lam"])
        return np.array([0.5, 0.5 - q, q])

    def sample(self, params, size, rng):
        return rng.choice(3, size=size, p=self.probs(params))

    def element(self, params, raw):
        return self._gens[self._codes[int(raw)]]

    def step_law(self, params):
        return np.arange(3), self.probs(params)

    def contains(self, params, point):
        return _nonneg_int(point)


class _ArratiaLattice(_Model):
    name, kind = "arratia-lattice", "map"

    def check(self, params):
        _need(params, "m", lambda v: _is_int(v) and v >= 2, "need an integer m >= 2")
        return {"m": int(params["m"])}

    def sample(self, params, size, rng):
        size = tuple(np.atleast_1d(size)) + (params["m"],)
        return rng.integers(0, 2, size=size, dtype=np.int8) * 2 - 1

    def element(self, params, raw):
        return sg.MapElem.from_signs(raw)

    def contains(self, params, point):
        return _is_int(point) and 0 <= point < params["m"]


class _StickyKernel(_Model):
    name, kind = "sticky-kernel", "kernel"

    def check(self, params):
        _need(params, "m", lambda v: _is_int(v) and v >= 3, "need an integer m >= 3")
        _need(params, "eps", lambda v: 0 < v < 1, "need 0 < eps < 1")
        return {"m": int(params["m"]), "eps": float(params["eps"])}

    def sample(self, params, size, rng):
        size = tuple(np.atleast_1d(size)) + (params["m"],)
        return sample_beta_symmetric(params["eps"], size, rng)

    def element(self, params, raw):
        return sg.KernelElem.from_theta(raw)

    def contains(self, params, point):
        return _is_int(point) and 0 <= point < params["m"]


class _Continuum(_Model):
    def check(self, params):
        _need(params, "dt", lambda v: v > 0, "need dt > 0")
        return {"dt": float(params["dt"])}

    def contains(self, params, point):
        return point >= 0


class _Coal(_Continuum):
    name, kind = "coal", "coal"

    def sample(self, params, size, rng):
        a, b = coal_increment_arrays(params["dt"], size, rng)
        return np.stack([a, b], axis=-1)

    def element(self, params, raw):
        return sg.CoalElem(float(raw[0]), float(raw[1]))


class _Split(_Continuum):
    name, kind = "split", "split"

    def sample(self, params, size, rng):
        a, b = coal_increment_arrays(params["dt"], size, rng)
        sign = rng.integers(0, 2, size=np.shape(a)) * 2 - 1
        return np.stack([a, b, sign], axis=-1)

    def element(self, params, raw):
        return sg.SplitElem(float(raw[0]), float(raw[1]), int(raw[2]))

    def contains(self, params, point):
        return True


class _Sticky(_Continuum):
    name, kind = "sticky", "sticky"

    def check(self, params):
        _need(params, "lam", lambda v: v > 0, "need lam > 0")
        out = super().check(params)
        out["lam"] = float(params["lam"])
        return out

    def sample(self, params, size, rng):
        a, b, c = sticky_increment_arrays(params["dt"], params["lam"], size, rng)
        return np.stack([a, b, c], axis=-1)

    def element(self, params, raw):
        return sg.StickyElem(float(raw[0]), float(raw[1]), float(raw[2]))


MODELS = {
    m.name: m
    for m in (
        _ZmToy(),
        _CoalLattice(),
        _SplitLattice(),
        _StickyLattice(),
        _ArratiaLattice(),
        _StickyKernel(),
        _Coal(),
        _Split(),
        _Sticky(),
    )
}


def _model(name: str) -> _Model:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def check_params(model: str, params: dict | None = None) -> dict:
    return _model(model).check(params or {})


def sample_raw(model: str, params: dict, size, rng) -> np.ndarray:
    """Raw step data of the given leading shape (already validated params)."""
    return _model(model).sample(params, size, rng)


def sample_step(model: str, params: dict | None, rng):
    """One i.i.d. step as a semigroup element.

    For ``sticky-kernel`` the element is a ``KernelElem`` whose ``theta``
    attribute holds the site coins.
    """
    m = _model(model)
    params = m.check(params or {})
    raw = m.sample(params, (1,), as_generator(rng))[0]
    return m.element(params, raw)


@dataclass(frozen=True, eq=False)
class FlowPath:
    """One realisation of a discrete flow on the grid ``0, dt, ..., n dt``."""

    model: str
    params: dict
    raw: np.ndarray
    tail_raw: object = None

    @property
    def n_steps(self) -> int:
        return len(self.raw)

    @property
    def dt(self) -> float:
        return self.params.get("dt", 1.0)

    @functools.cached_property
    def steps(self) -> tuple:
        m = _model(self.model)
        return tuple(m.element(self.params, r) for r in self.raw)

    @property
    def tail(self):
        if self.tail_raw is None:
            return None
        return _model(self.model).element(self.params, self.tail_raw)

    def identity(self):
        return _model(self.model).identity(self.params)

    def interval_product(self, s: int, t: int):
        """``X[s, t]``: steps ``s .. t-1`` composed in time order."""
        if not (0 <= s <= t <= self.n_steps):
            raise IndexError(f"need 0 <= s <= t <= {self.n_steps}, got s={s}, t={t}")
        return functools.reduce(sg.compose, self.steps[s:t], self.identity())

    def to_infinity(self, s: int = 0):
        """``X[s, inf]`` for the toy model: finite steps, then the tail factor."""
        if self.tail_raw is None:
            raise ValueError(f"model {self.model!r} has no tail factor")
        return sg.compose(self.interval_product(s, self.n_steps), self.tail)

    def prefix_products(self) -> list:
        """``[X[0, 0], X[0, 1], ..., X[0, n]]``."""
        out = [self.identity()]
        for step in self.steps:
            out.append(sg.compose(out[-1], step))
        return out


def build_flow(model: str, params: dict | None, n_steps: int, rng) -> FlowPath:
    m = _model(model)
    params = m.check(params or {})
    if not _is_int(n_steps) or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps!r}")
    rng = as_generator(rng)
    raw = m.sample(params, (n_steps,), rng)
    tail = m.sample_tail(params, (), rng) if m.has_tail else None
    return FlowPath(model, params, raw, tail)


def interval_product(flow: FlowPath, s: int, t: int):
    return flow.interval_product(s, t)


@dataclass
class Trajectory:
    start: object
    positions: list = field(default_factory=list)


def n_point_motion(flow: FlowPath, starts: Sequence, rng=None) -> list[Trajectory]:
    """Move every start point through the same steps.

    Map flows are deterministic given the steps.  Kernel flows move particles
    conditionally independently given the site coins, so they need ``rng``.
    """
    m = _model(flow.model)
    for x in starts:
        if not m.contains(flow.params, x):
            raise ValueError(f"start {x!r} is outside the state space of {flow.model!r}")
    if m.kind == "kernel":
        if rng is None:
            raise ValueError("kernel flows need an rng for the n-point motion")
        rng = as_generator(rng)
        k = len(starts)
        mod = flow.params["m"]
        pos = np.array(starts, dtype=np.int64)
        hist = [pos.copy()]
        for theta in flow.raw:
            right = rng.random(k) < theta[pos]
            pos = (pos + np.where(right, 1, -1)) % mod
            hist.append(pos.copy())
        hist = np.array(hist)
        return [Trajectory(starts[j], [int(v) for v in hist[:, j]]) for j in range(k)]
    trajs = []
    for x in starts:
        path = [x]
        for step in flow.steps:
            path.append(step(path[-1]))
        trajs.append(Trajectory(x, path))
    return trajs


def arratia_motion_batch(m: int, starts, n_steps: int, replicas: int, rng) -> np.ndarray:
    """Positions of the Arratia n-point motion, shape ``(replicas, n_steps + 1, k)``.

    Each step draws a fresh sign for every site of every replica, exactly as
    ``build_flow('arratia-lattice', ...)`` does, and particles read the sign
    at their current site.
    """
    rng = as_generator(rng)
    starts = np.asarray(starts, dtype=np.int64)
    pos = np.broadcast_to(starts, (replicas, starts.size)).copy()
    out = np.empty((replicas, n_steps + 1, starts.size), dtype=np.int64)
    out[:, 0] = pos
    rows = np.arange(replicas)[:, None]
    for k in range(n_steps):
        signs = rng.integers(0, 2, size=(replicas, m), dtype=np.int8) * 2 - 1
        pos = (pos + signs[rows, pos]) % m
        out[:, k + 1] = pos
    return out


def coal_increment_arrays(t: float, size, rng):
    """Exact draw of ``(a, b)`` = (Brownian increment, minus its running minimum).

    ``a ~ N(0, t)``; given ``a``, ``P(b > y) = exp(-2 y (y + a) / t)`` for
    ``y >= max(0, -a)`` (Brownian bridge minimum), inverted in closed form.
    """
    if not t > 0:
        raise ValueError(f"duration must be positive, got {t!r}")
    rng = as_generator(rng)
    a = math.sqrt(t) * rng.standard_normal(size)
    e = rng.standard_exponential(size)
    b = 0.5 * (-a + np.sqrt(a * a + 2.0 * t * e))
    # round-off can leave a + b a hair below zero when a < 0
    b = np.maximum(b, np.maximum(-a, 0.0))
    return a, b


def sample_coal_increment(t: float, rng) -> sg.CoalElem:
    a, b = coal_increment_arrays(t, None, rng)
    return sg.CoalElem(float(a), float(b))


def sticky_increment_arrays(t: float, lam: float, size, rng):
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam!r}")
    rng = as_generator(rng)
    a, b = coal_increment_arrays(t, size, rng)
    eta = rng.standard_exponential(size)
    c = np.maximum(0.0, a + b - lam * eta)
    return a, b, c


def sample_sticky_increment(t: float, lam: float, rng) -> sg.StickyElem:
    a, b, c = sticky_increment_arrays(t, lam, None, rng)
    return sg.StickyElem(float(a), float(b), float(c))


def sample_beta_symmetric(eps: float, size, rng) -> np.ndarray:
    """Beta(eps, eps) as ``G1 / (G1 + G2)`` with independent Gamma(eps) draws."""
    rng = as_generator(rng)
    g1 = rng.standard_gamma(eps, size)
    g2 = rng.standard_gamma(eps, size)
    total = g1 + g2
    # both gammas can underflow for tiny eps; the limit law puts mass 1/2 on each end
    safe = total > 0
    theta = np.where(safe, g1 / np.where(safe, total, 1.0), 0.0)
    if not safe.all():
        theta = np.where(safe, theta, rng.integers(0, 2, size=np.shape(theta)))
    return theta


@dataclass(frozen=True)
class CircleFlowSample:
    """Brownian motion in logarithmic time, frozen before ``eps``.

    ``brownian[i]`` is ``B(ln(max(t_i, eps) / eps))``; the flow increment
    ``Y[s, t]`` is the difference reduced mod 1.
    """

    eps: float
    times: np.ndarray
    brownian: np.ndarray

    def unreduced(self, i: int, j: int):
        return self.brownian[..., j] - self.brownian[..., i]

    def increment(self, i: int, j: int):
        return np.mod(self.unreduced(i, j), 1.0)


def sample_circle_flow(eps: float, grid, rng, replicas: int | None = None) -> CircleFlowSample:
    """Sample the circle flow at the grid times (optionally many replicas at once)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or times.size < 1 or (times < 0).any():
        raise ValueError("grid must be a non-empty 1-d array of times >= 0")
    if (np.diff(times) <= 0).any():
        raise ValueError("grid must be strictly increasing")
    rng = as_generator(rng)
    logt = np.log(np.maximum(times, eps) / eps)
    dvar = np.diff(logt, prepend=0.0)
    shape = (times.size,) if replicas is None else (replicas, times.size)
    z = rng.standard_normal(shape)
    brown = np.cumsum(z * np.sqrt(dvar), axis=-1)
    return CircleFlowSample(eps, times, brown)


def write_trajectories_csv(fh, replicas: Sequence[Sequence[Trajectory]]) -> None:
    """CSV with columns replica, time_index, particle, position."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["replica", "time_index", "particle", "position"])
    for r, trajs in enumerate(replicas):
        for p, tr in enumerate(trajs):
            for k, x in enumerate(tr.positions):
                w.writerow([r, k, p, repr(float(x)) if isinstance(x, float) else x])
