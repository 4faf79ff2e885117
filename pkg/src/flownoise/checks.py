"""Exact invariant suites, shared by ``flownoise check`` and the test-suite.

Each check returns a :class:`CheckResult`.  The random instances come from a
fixed seed, so the suites are deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import chaos, perturb, sticky_exact
from . import semigroups as sg
from .estimators import line_distance_oracle, meeting_probability_oracle

__all__ = [
    "CheckResult",
    "random_elements",
    "random_points",
    "semigroup_laws",
    "coalescence_dual",
    "chaos_eigenvalue_law",
    "spectral_product_law",
    "beta_identity",
    "sticky_balance",
    "meeting_oracle",
    "enumeration_vs_chaos",
    "run_all",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def random_elements(kind: str, count: int, rng, m: int = 7, span: int = 6) -> list:
    """``count`` random elements with small integer parameters (exact arithmetic)."""
    if kind == "zm":
        return [sg.ZmElem(m, v) for v in rng.integers(m, size=count).tolist()]
    if kind == "map":
        return [sg.MapElem(tuple(row)) for row in rng.integers(0, m, size=(count, m)).tolist()]
    if kind not in ("coal", "split", "half-split", "sticky"):
        raise ValueError(f"no random integer instances for {kind!r}")
    b = rng.integers(0, span, size=count)
    a = rng.integers(-b, span)
    if kind == "coal":
        return [sg.CoalElem(x, y) for x, y in zip(a.tolist(), b.tolist())]
    if kind == "half-split":
        return [sg.HalfSplitElem(x, y) for x, y in zip(a.tolist(), b.tolist())]
    if kind == "split":
        sign = rng.integers(0, 2, size=count) * 2 - 1
        return [sg.SplitElem(x, y, z) for x, y, z in zip(a.tolist(), b.tolist(), sign.tolist())]
    c = rng.integers(0, a + b + 1)
    return [sg.StickyElem(x, y, z) for x, y, z in zip(a.tolist(), b.tolist(), c.tolist())]


def random_points(kind: str, count: int, rng, m: int = 7, span: int = 6) -> list:
    if kind in ("zm", "map"):
        pts = rng.integers(m, size=count)
    elif kind == "split":
        pts = rng.integers(-3 * span, 3 * span, size=count)
    elif kind == "half-split":
        pts = 2 * rng.integers(-3 * span, 3 * span, size=count) + 1
    else:
        pts = rng.integers(0, 3 * span, size=count)
    return pts.tolist()


ALL_KINDS = ("zm", "coal", "split", "half-split", "sticky", "map")


def semigroup_laws(instances: int = 10_000, seed: int = 0, kinds=ALL_KINDS) -> CheckResult:
    """Associativity, pointwise soundness, identities, lattice relations,
    radial intertwining and the radial homomorphism on random integer elements."""
    rng = np.random.default_rng(seed)
    failures = []
    for kind in kinds:
        e = sg.identity(kind, 7)
        xs, ys, zs = (random_elements(kind, instances, rng) for _ in range(3))
        ps = random_points(kind, instances, rng)
        radial = kind in ("split", "sticky", "half-split")
        rad = sg.radial_homomorphism
        for x, y, z, p in zip(xs, ys, zs, ps):
            xy = x.compose(y)
            if xy.compose(z) != x.compose(y.compose(z)):
                failures.append(("associativity", kind, x, y, z))
            if xy(p) != y(x(p)):
                failures.append(("pointwise", kind, x, y, p))
            if e.compose(x) != x or x.compose(e) != x:
                failures.append(("identity", kind, x))
            if radial:
                rx = rad(x)
                if rad(xy) != rx.compose(rad(y)):
                    failures.append(("homomorphism", kind, x, y))
                if kind == "split" and abs(x(p)) != rx(abs(p)):
                    failures.append(("intertwining", kind, x, p))
                if kind == "half-split" and (abs(x(p)) - 1) // 2 != rx((abs(p) - 1) // 2):
                    failures.append(("intertwining", kind, x, p))
    c = sg.coal_generators()
    s = sg.sticky_generators()
    h = sg.half_split_generators()
    relations = {
        "coal f+ f- = 1": sg.compose(c["+"], c["-"]) == sg.identity("coal"),
        "sticky f+ f- = 1": sg.compose(s["+"], s["-"]) == sg.identity("sticky"),
        "sticky f* f- = 1": sg.compose(s["*"], s["-"]) == sg.identity("sticky"),
        "sticky f* f+ = f* f*": sg.compose(s["*"], s["+"]) == sg.compose(s["*"], s["*"]),
        "half-split f+ f- = 1": sg.compose(h["+"], h["-"]) == sg.identity("half-split"),
    }
    failures += [("relation", k) for k, ok in relations.items() if not ok]
    return CheckResult(
        "semigroup_laws",
        not failures,
        {"kinds": list(kinds), "instances_per_kind": instances, "failures": [repr(f) for f in failures[:5]], "relations": relations},
    )


def coalescence_dual(paths: int = 1000, length: int = 1000, seed: int = 1) -> CheckResult:
    """``b[0, t] = -min_{s <= t} a[0, s]`` along random coal-lattice paths."""
    rng = np.random.default_rng(seed)
    steps = rng.integers(0, 2, size=(paths, length)) * 2 - 1
    a_gen = steps
    b_gen = (steps < 0).astype(np.int64)
    a = np.zeros(paths, dtype=np.int64)
    b = np.zeros(paths, dtype=np.int64)
    bs = np.empty((paths, length), dtype=np.int64)
    for k in range(length):
        a, b = sg.coal_compose_arrays(a, b, a_gen[:, k], b_gen[:, k])
        bs[:, k] = b
    prefix = np.cumsum(steps, axis=1)
    dual = -np.minimum(np.minimum.accumulate(prefix, axis=1), 0)
    ok = bool(np.array_equal(bs, dual)) and bool(np.array_equal(a, prefix[:, -1]))
    return CheckResult("coalescence_dual", ok, {"paths": paths, "length": length})


def chaos_eigenvalue_law(max_steps: int = 12, rhos=(0.0, 0.3, 0.7, 0.95, 1.0)) -> CheckResult:
    """``<U^rho f, f> = rho (cos^2(pi/m) + rho sin^2(pi/m))^n ||f||^2`` for the Z_m toy."""
    worst = 0.0
    for m in (2, 3, 4):
        for n in range(1, max_steps + 1):
            f = chaos.zm_toy_character(m, n)
            mu = chaos.spectral_measure(f)
            norm2 = f.norm2()
            cos2 = math.cos(math.pi / m) ** 2
            for rho in rhos:
                exact = rho * (cos2 + rho * (1 - cos2)) ** n * norm2
                got = sum(rho ** bin(k).count("1") * w for k, w in mu.weights.items())
                err = abs(got - exact) / norm2
                worst = max(worst, err)
    return CheckResult("chaos_eigenvalue_law", worst <= 1e-12, {"max_relative_error": worst})


def spectral_product_law(trials: int = 20, max_factors: int = 10, seed: int = 2) -> CheckResult:
    """``spectral_measure(exp_map(g))`` is product Bernoulli with ``|g_t|^2 / (1 + |g_t|^2)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, max_factors + 1))
        p = rng.uniform(0.1, 0.9, size=n)
        space = chaos.FiniteProductSpace(tuple(np.array([1 - q, q]) for q in p))
        gs = []
        for t in range(n):
            v1 = rng.normal() + 1j * rng.normal()
            vals = np.array([-p[t] * v1 / (1 - p[t]), v1])  # centred
            gs.append(chaos.factor_variable(space, t, vals))
        f = chaos.exp_map(gs)
        mu = chaos.spectral_measure(f).normalized()
        incl = np.array([g.norm2() / (1 + g.norm2()) for g in gs])
        for mask in range(1 << n):
            bits = np.array([(mask >> t) & 1 for t in range(n)], dtype=bool)
            target = float(np.prod(np.where(bits, incl, 1 - incl)))
            worst = max(worst, abs(mu.weights.get(mask, 0.0) - target))
    return CheckResult("spectral_product_law", worst <= 1e-12, {"max_abs_error": worst})


def beta_identity(max_n: int = 8, eps_values=(0.05, 0.1, 0.3, 0.5, 0.9)) -> CheckResult:
    worst = 0.0
    for eps in eps_values:
        for n in range(max_n + 1):
            for k in range(n + 1):
                worst = max(worst, sticky_exact.beta_moment_identity(n, k, eps)[2])
    return CheckResult("beta_identity", worst <= 1e-10, {"max_relative_error": worst})


def sticky_balance(max_m: int = 5, max_n: int = 4, eps: float = 0.25) -> CheckResult:
    """Stationarity, per-channel balance and row sums for every ``3 <= m <= max_m``, ``1 <= n <= max_n``."""
    rows = []
    ok = True
    for m in range(3, max_m + 1):
        for n in range(1, max_n + 1):
            r = sticky_exact.check_detailed_balance(m, n, eps)
            good = max(r.max_violation, r.stationarity_error, r.max_row_sum_error, r.symmetric_weight_error) <= 1e-10
            ok &= good
            rows.append(r.to_json_obj())
    return CheckResult("sticky_balance", ok, {"eps": eps, "reports": rows})


def _enumerate_meeting(d: int, t: int) -> float:
    """Brute force over all sign choices of the two particles (independent until they meet)."""
    hits = 0
    for signs in itertools.product((-1, 1), repeat=2 * t):
        x, y, met = 0, d, False
        for k in range(t):
            s1, s2 = signs[2 * k], signs[2 * k + 1]
            if met:
                continue
            x, y = x + s1, y + s2
            met = x == y
        hits += met
    return hits / 4**t


def meeting_oracle(max_t: int = 5) -> CheckResult:
    """DP oracle against brute force, and the line martingale property."""
    worst = 0.0
    for d in (2, 4):
        for t in range(1, max_t + 1):
            worst = max(worst, abs(meeting_probability_oracle(0, d, t) - _enumerate_meeting(d, t)))
    line = line_distance_oracle(6, 30)
    mart = float(np.abs(line - 6).max())
    return CheckResult(
        "meeting_oracle",
        worst <= 1e-15 and mart <= 1e-12,
        {
            "max_abs_error": worst,
            "line_martingale_error": mart,
            "d2_t1": meeting_probability_oracle(0, 2, 1),
            "d2_t2": meeting_probability_oracle(0, 2, 2),
        },
    )


def enumeration_vs_chaos(trials: int = 30, seed: int = 3, rhos=(0.0, 0.25, 0.6, 1.0)) -> CheckResult:
    """Coupled-pair enumeration and the spectral form agree on random small spaces."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        atoms = rng.integers(2, 5, size=n)
        while np.prod(atoms) > 4096:
            atoms = rng.integers(2, 5, size=n)
        probs = [rng.dirichlet(np.ones(k)) + 1e-3 for k in atoms]
        probs = [p / p.sum() for p in probs]
        values = rng.normal(size=tuple(atoms)) + 1j * rng.normal(size=tuple(atoms))
        f = chaos.RandomVariable(chaos.FiniteProductSpace(tuple(probs)), values)
        for rho in rhos:
            brute = perturb.enumerate_correlation(probs, values, rho)
            form = chaos.urho_form(f, rho)
            worst = max(worst, abs(brute - form) / max(1.0, f.norm2()))
    return CheckResult("enumeration_vs_chaos", worst <= 1e-12, {"max_error": worst})


def run_all(quick: bool = False) -> list[CheckResult]:
    instances = 500 if quick else 10_000
    return [
        semigroup_laws(instances),
        coalescence_dual(),
        chaos_eigenvalue_law(),
        spectral_product_law(),
        beta_identity(),
        sticky_balance(),
        meeting_oracle(),
        enumeration_vs_chaos(),
    ]
