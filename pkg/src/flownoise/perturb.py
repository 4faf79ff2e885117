"""The rho-resampling coupling of two flows and correlation estimates.

Every independent factor of a flow (each step, and the toy model's tail) is
kept with probability ``rho`` and redrawn independently otherwise.  For a
functional ``f`` the quantity of interest is ``E[f(first) * conj(f(second))]``.

Correlations estimated here are for specific functionals, so they are lower
bounds for the maximal correlation of the coupling, never the maximum itself.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import flows
from .streams import DEFAULT_BLOCK, as_generator, jackknife_mean, map_blocks

__all__ = [
    "CoupledPair",
    "CorrelationEstimate",
    "DegenerateFunctionalError",
    "BatchFunctional",
    "zm_character",
    "step_function",
    "arratia_sign",
    "couple",
    "estimate_correlation",
    "sensitivity_curve",
    "write_sensitivity_csv",
    "exact_step_factor",
    "joint_step_law",
    "enumerate_correlation",
]

MIN_REPLICAS = 100


class DegenerateFunctionalError(ValueError):
    """The functional is constant on the sample, so a correlation is meaningless."""


@dataclass(frozen=True, eq=False)
class CoupledPair:
    rho: float
    first: flows.FlowPath
    second: flows.FlowPath
    resampled: np.ndarray
    tail_resampled: bool | None = None

    def swapped(self) -> "CoupledPair":
        return CoupledPair(self.rho, self.second, self.first, self.resampled, self.tail_resampled)


@dataclass(frozen=True)
class CorrelationEstimate:
    """Real part of the Monte Carlo mean with its jackknife standard error."""

    value: float
    std_error: float
    replicas: int
    imag: float = 0.0


def _check_rho(rho):
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho!r}")


class BatchFunctional:
    """A functional with both a per-path and a vectorised evaluation.

    ``batch(raw, tail_raw, params)`` receives raw step data with a leading
    replica axis and returns one value per replica.
    """

    def __init__(self, path_fn: Callable, batch_fn: Callable, name: str = ""):
        self._path_fn = path_fn
        self._batch_fn = batch_fn
        self.name = name

    def __call__(self, path: flows.FlowPath):
        return self._path_fn(path)

    def batch(self, raw, tail_raw, params):
        return self._batch_fn(raw, tail_raw, params)

    def __repr__(self):
        return f"BatchFunctional({self.name!r})"


def zm_character(m: int, k: int = 1) -> BatchFunctional:
    """``exp(2 pi i k X[0, inf] / m)`` for the Z_m toy flow."""

    def path_fn(path):
        return np.exp(2j * np.pi * k * path.to_infinity(0).value / m)

    def batch_fn(raw, tail_raw, params):
        total = raw.sum(axis=-1) + tail_raw
        return np.exp(2j * np.pi * k * (total % m) / m)

    return BatchFunctional(path_fn, batch_fn, f"zm_character(m={m}, k={k})")


def step_function(index: int, fn: Callable) -> BatchFunctional:
    """A functional of a single step's raw value, ``fn(raw[index])``."""

    def path_fn(path):
        return fn(path.raw[index])

    def batch_fn(raw, tail_raw, params):
        return fn(raw[:, index])

    return BatchFunctional(path_fn, batch_fn, f"step_function({index})")


def arratia_sign(x: int) -> BatchFunctional:
    """Sign of the unwrapped displacement of the particle started at ``x``."""

    def path_fn(path):
        pos, disp = x, 0
        for signs in path.raw:
            s = int(signs[pos])
            disp += s
            pos = (pos + s) % path.params["m"]
        return float(np.sign(disp))

    def batch_fn(raw, tail_raw, params):
        m = params["m"]
        reps = raw.shape[0]
        rows = np.arange(reps)
        pos = np.full(reps, x, dtype=np.int64)
        disp = np.zeros(reps, dtype=np.int64)
        for k in range(raw.shape[1]):
            s = raw[rows, k, pos]
            disp += s
            pos = (pos + s) % m
        return np.sign(disp).astype(float)

    return BatchFunctional(path_fn, batch_fn, f"arratia_sign(x={x})")


def _coupled_raw(model, params, n_steps, replicas, rng):
    """Base draw, fresh draw and the uniforms deciding which factors are kept."""
    m = flows.MODELS[model]
    base = m.sample(params, (replicas, n_steps), rng)
    fresh = m.sample(params, (replicas, n_steps), rng)
    u = rng.random((replicas, n_steps))
    if m.has_tail:
        tails = (m.sample_tail(params, replicas, rng), m.sample_tail(params, replicas, rng))
        u_tail = rng.random(replicas)
    else:
        tails, u_tail = (None, None), None
    return base, fresh, u, tails, u_tail


def _second(base, fresh, u, rho):
    mask = u >= rho
    shaped = mask.reshape(mask.shape + (1,) * (base.ndim - mask.ndim))
    return np.where(shaped, fresh, base), mask


def couple(model: str, params: dict | None, n_steps: int, rho: float, rng) -> CoupledPair:
    _check_rho(rho)
    m = flows.MODELS.get(model)
    if m is None:
        raise ValueError(f"unknown model {model!r}")
    params = m.check(params or {})
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = as_generator(rng)
    base, fresh, u, (t1, t2), ut = _coupled_raw(model, params, n_steps, 1, rng)
    second, mask = _second(base, fresh, u, rho)
    tail_mask = None
    if m.has_tail:
        tail_mask = bool(ut[0] >= rho)
        t2 = t2 if tail_mask else t1
        t1, t2 = t1[0], t2[0]
    first_path = flows.FlowPath(model, params, base[0], t1)
    second_path = flows.FlowPath(model, params, second[0], t2)
    return CoupledPair(rho, first_path, second_path, mask[0], tail_mask)


def _block_products(functional, model, params, n_steps, rhos, size, rng):
    """Products ``f(first) conj f(second)`` for one replica block, per rho."""
    if isinstance(functional, BatchFunctional):
        base, fresh, u, (t1, t2), ut = _coupled_raw(model, params, n_steps, size, rng)
        f1 = np.asarray(functional.batch(base, t1, params))
        out = []
        for rho in rhos:
            second, _ = _second(base, fresh, u, rho)
            tail2 = None if t1 is None else np.where(ut >= rho, t2, t1)
            f2 = np.asarray(functional.batch(second, tail2, params))
            out.append(f1 * np.conj(f2))
        return f1, out
    # generic callables: one coupled pair per replica, shared uniforms across rho
    f1s, per_rho = [], [[] for _ in rhos]
    for _ in range(size):
        base, fresh, u, (t1, t2), ut = _coupled_raw(model, params, n_steps, 1, rng)
        first = flows.FlowPath(model, params, base[0], None if t1 is None else t1[0])
        f1 = functional(first)
        f1s.append(f1)
        for j, rho in enumerate(rhos):
            second, _ = _second(base, fresh, u, rho)
            tail2 = None if t1 is None else (t2 if ut[0] >= rho else t1)[0]
            f2 = functional(flows.FlowPath(model, params, second[0], tail2))
            per_rho[j].append(f1 * np.conj(f2))
    return np.asarray(f1s), [np.asarray(v) for v in per_rho]


def _estimates(functional, model, params, n_steps, rhos, replicas, rng, threads, block):
    for rho in rhos:
        _check_rho(rho)
    if replicas < MIN_REPLICAS:
        raise ValueError(f"need at least {MIN_REPLICAS} replicas, got {replicas}")
    m = flows.MODELS.get(model)
    if m is None:
        raise ValueError(f"unknown model {model!r}")
    params = m.check(params or {})

    def work(size, gen):
        return _block_products(functional, model, params, n_steps, rhos, size, gen)

    results = map_blocks(work, rng, replicas, block=block, threads=threads)
    f1 = np.concatenate([r[0] for r in results])
    if np.ptp(f1.real) == 0 and np.ptp(f1.imag) == 0:
        raise DegenerateFunctionalError("functional is constant on every replica")
    out = []
    for j in range(len(rhos)):
        prods = np.concatenate([r[1][j] for r in results])
        value, se = jackknife_mean(prods.real)
        out.append(CorrelationEstimate(value, se, int(prods.size), float(prods.imag.mean())))
    return out


def estimate_correlation(
    functional,
    model: str,
    params: dict | None,
    n_steps: int,
    rho: float,
    replicas: int,
    rng,
    threads: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> CorrelationEstimate:
    """Monte Carlo ``E[f(first) conj f(second)]`` under the rho-coupling."""
    return _estimates(functional, model, params, n_steps, [rho], replicas, rng, threads, block)[0]


def sensitivity_curve(
    functional,
    model: str,
    params: dict | None,
    n_steps: int,
    rho_grid: Sequence[float],
    replicas: int,
    rng,
    threads: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> list[tuple[float, CorrelationEstimate]]:
    """Correlation at every rho from one set of replicas.

    The same base flow, fresh draws and keep-uniforms serve every rho (common
    random numbers), so the curve is smooth in rho and differences between
    grid points have small variance.
    """
    rhos = [float(r) for r in rho_grid]
    ests = _estimates(functional, model, params, n_steps, rhos, replicas, rng, threads, block)
    return list(zip(rhos, ests))


def write_sensitivity_csv(fh, curve) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["rho", "estimate", "std_error", "replicas"])
    for rho, est in curve:
        w.writerow([repr(rho), repr(est.value), repr(est.std_error), est.replicas])


def exact_step_factor(probs, values, rho: float) -> float:
    """``|E f|^2 + rho Var f`` for one factor with a finite law."""
    _check_rho(rho)
    p = np.asarray(probs, dtype=float)
    v = np.asarray(values, dtype=complex)
    mean = np.dot(p, v)
    var = np.dot(p, np.abs(v - mean) ** 2)
    return float(abs(mean) ** 2 + rho * var)


def joint_step_law(probs, rho: float) -> np.ndarray:
    """Joint law of (first, second) atoms for one factor.

    Enumerates the two coupling outcomes: kept (probability rho, same atom)
    or redrawn (probability 1 - rho, independent atom).
    """
    p = np.asarray(probs, dtype=float)
    return rho * np.diag(p) + (1.0 - rho) * np.outer(p, p)


def enumerate_correlation(probs_list, values, rho: float, max_outcomes: int = 4096) -> complex:
    """Exact ``E[f(first) conj f(second)]`` by summing over all coupled outcome pairs.

    ``values`` is the tensor of ``f`` over the product of factor atoms.  The
    joint law of the pair of full outcomes is the Kronecker product of the
    per-factor joint laws, so the sum runs over every ``(omega', omega'')``.
    """
    _check_rho(rho)
    values = np.asarray(values, dtype=complex)
    if values.shape != tuple(len(p) for p in probs_list):
        raise ValueError("values shape does not match the factor atom counts")
    if values.size > max_outcomes:
        raise ValueError(f"{values.size} outcomes exceed the enumeration cap {max_outcomes}")
    joint = np.ones((1, 1))
    for p in probs_list:
        joint = np.kron(joint, joint_step_law(p, rho))
    flat = values.reshape(-1)
    return complex(flat @ joint @ np.conj(flat))
