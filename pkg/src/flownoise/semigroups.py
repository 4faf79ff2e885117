"""Concrete semigroups of maps and their composition laws.

Composition order is "left acts first": ``compose(x, y)`` is the map
``p -> y(x(p))``.  This matches writing a product ``xy`` for ``y o x``, so a
flow's interval products read left to right in time::

    X[r, t] == compose(X[r, s], X[s, t])

Every element is an immutable value.  Integer parameters give exact lattice
arithmetic; float parameters model the continuum semigroups.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Integral, Real
from typing import Union

import numpy as np

__all__ = [
    "SemigroupError",
    "ZmElem",
    "CoalElem",
    "SplitElem",
    "HalfSplitElem",
    "StickyElem",
    "MapElem",
    "KernelElem",
    "SemigroupElement",
    "KINDS",
    "identity",
    "compose",
    "apply",
    "radial_homomorphism",
    "coal_generators",
    "sticky_generators",
    "half_split_generators",
    "coal_compose_arrays",
    "sticky_compose_arrays",
]

# slack for float round-off in the parameter constraints
_TOL = 1e-12


class SemigroupError(ValueError):
    """Invalid element, mismatched semigroups, or a point outside the domain."""


def _slack(*xs) -> float:
    return _TOL * (1.0 + sum(abs(float(x)) for x in xs))


_new = object.__new__


def _trusted_maker(cls):
    """Constructor that skips validation, for products of valid elements (closure).

    Writes the slots directly; arguments follow the field order of ``cls``.
    """
    setters = [cls.__dict__[name].__set__ for name in cls.__slots__]
    if len(setters) == 2:
        set_a, set_b = setters

        def make(a, b):
            obj = _new(cls)
            set_a(obj, a)
            set_b(obj, b)
            return obj

    else:
        set_a, set_b, set_c = setters

        def make(a, b, c):
            obj = _new(cls)
            set_a(obj, a)
            set_b(obj, b)
            set_c(obj, c)
            return obj

    return make


def _check_nonneg_point(p) -> None:
    # exact type test first: the ABC check is slow on hot paths
    if not (type(p) in (int, float) or isinstance(p, Real)) or p < 0:
        raise SemigroupError(f"point {p!r} is outside [0, inf)")


@dataclass(frozen=True, slots=True)
class ZmElem:
    """Element of the cyclic group Z_m, written additively."""

    m: int
    value: int

    def __post_init__(self):
        if not isinstance(self.m, Integral) or self.m < 2:
            raise SemigroupError(f"modulus must be an integer >= 2, got {self.m!r}")
        if not isinstance(self.value, Integral) or not 0 <= self.value < self.m:
            raise SemigroupError(f"value {self.value!r} not in [0, {self.m})")

    @classmethod
    def of(cls, m: int, value: int) -> "ZmElem":
        return cls(int(m), int(value) % int(m))

    def compose(self, other: "ZmElem") -> "ZmElem":
        if self.m != other.m:
            raise SemigroupError(f"moduli differ: {self.m} vs {other.m}")
        return ZmElem(self.m, (self.value + other.value) % self.m)

    def __call__(self, p):
        if not isinstance(p, Integral) or not 0 <= p < self.m:
            raise SemigroupError(f"point {p!r} not in Z_{self.m}")
        return (p + self.value) % self.m


@dataclass(frozen=True, slots=True)
class CoalElem:
    """The coalescence map ``x -> a + max(x, b)`` on [0, inf)."""

    a: Real
    b: Real

    def __post_init__(self):
        # cheap comparisons first: this runs on every composition
        if self.b < 0 and self.b < -_slack(self.b):
            raise SemigroupError(f"b must be >= 0, got {self.b!r}")
        if self.a + self.b < 0 and self.a + self.b < -_slack(self.a, self.b):
            raise SemigroupError(f"a + b must be >= 0, got a={self.a!r}, b={self.b!r}")

    def compose(self, other: "CoalElem") -> "CoalElem":
        return _trusted_coal(self.a + other.a, max(self.b, other.b - self.a))

    def __call__(self, p):
        _check_nonneg_point(p)
        return self.a + max(p, self.b)


@dataclass(frozen=True, slots=True)
class SplitElem:
    """The splitting map ``f^sign_{a,b}`` on the real line.

    Outside ``[-b, b]`` a point is pushed away from the origin by ``a``; the
    whole interval ``[-b, b]`` lands on ``sign * (a + b)``.
    """

    a: Real
    b: Real
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise SemigroupError(f"sign must be -1 or +1, got {self.sign!r}")
        if self.b < 0 and self.b < -_slack(self.b):
            raise SemigroupError(f"b must be >= 0, got {self.b!r}")
        if self.a + self.b < 0 and self.a + self.b < -_slack(self.a, self.b):
            raise SemigroupError(f"a + b must be >= 0, got a={self.a!r}, b={self.b!r}")
        if self.a + self.b == 0:
            # both signs are the same map here; keep one representative
            object.__setattr__(self, "sign", 1)

    def compose(self, other: "SplitElem") -> "SplitElem":
        # the flat part of self survives other iff its image clears other's flat part
        sign = self.sign if self.a + self.b > other.b else other.sign
        a, b = self.a + other.a, max(self.b, other.b - self.a)
        return _trusted_split(a, b, 1 if a + b == 0 else sign)

    def __call__(self, p):
        if not isinstance(p, Real):
            raise SemigroupError(f"point {p!r} is not real")
        if p < -self.b:
            return p - self.a
        if p > self.b:
            return p + self.a
        return self.sign * (self.a + self.b)


@dataclass(frozen=True, slots=True)
class HalfSplitElem:
    """Word in the lattice splitting generators acting on Z + 1/2.

    Points are stored doubled, so the space is the odd integers.  The reduced
    word ``f_-^b f_+^(a+b)`` determines the map: the radial part
    ``r = (|y| - 1) / 2`` moves like ``CoalElem(a, b)``, and every ``f_-``
    applied at the innermost site ``+-1/2`` flips the sign.
    """

    a: int
    b: int

    def __post_init__(self):
        if not isinstance(self.a, Integral) or not isinstance(self.b, Integral):
            raise SemigroupError("lattice splitting elements need integer a, b")
        if self.b < 0 or self.a + self.b < 0:
            raise SemigroupError(f"need b >= 0 and a + b >= 0, got a={self.a}, b={self.b}")

    def compose(self, other: "HalfSplitElem") -> "HalfSplitElem":
        return _trusted_half_split(self.a + other.a, max(self.b, other.b - self.a))

    def __call__(self, y):
        if not isinstance(y, Integral) or y % 2 == 0:
            raise SemigroupError(f"point {y!r} is not an odd integer (doubled half-integer)")
        sign = 1 if y > 0 else -1
        r = (abs(y) - 1) // 2
        if r < self.b and (self.b - r) % 2 == 1:
            sign = -sign
        return sign * (2 * (self.a + max(r, self.b)) + 1)


@dataclass(frozen=True, slots=True)
class StickyElem:
    """The sticky map: ``[0, b]`` goes to ``c``, ``x > b`` goes to ``x + a``."""

    a: Real
    b: Real
    c: Real

    def __post_init__(self):
        if self.b < 0 and self.b < -_slack(self.b):
            raise SemigroupError(f"b must be >= 0, got {self.b!r}")
        if (self.c < 0 and self.c < -_slack(self.c)) or (
            self.c > self.a + self.b and self.c > self.a + self.b + _slack(self.a, self.b, self.c)
        ):
            raise SemigroupError(
                f"need 0 <= c <= a + b, got a={self.a!r}, b={self.b!r}, c={self.c!r}"
            )

    def compose(self, other: "StickyElem") -> "StickyElem":
        c = other.a + self.c if self.c > other.b else other.c
        return _trusted_sticky(self.a + other.a, max(self.b, other.b - self.a), c)

    def __call__(self, p):
        _check_nonneg_point(p)
        return self.c if p <= self.b else p + self.a


@dataclass(frozen=True, slots=True)
class MapElem:
    """An arbitrary self-map of {0, ..., m-1}, stored as its image table."""

    image: tuple

    def __post_init__(self):
        m = len(self.image)
        if m == 0 or any(not isinstance(v, Integral) or not 0 <= v < m for v in self.image):
            raise SemigroupError("image must be a non-empty table of values in [0, m)")

    @property
    def m(self) -> int:
        return len(self.image)

    @classmethod
    def from_signs(cls, signs) -> "MapElem":
        """One Arratia step: site x moves to x + signs[x] on the circle."""
        signs = np.asarray(signs)
        m = signs.shape[0]
        return cls(tuple(int(v) for v in (np.arange(m) + signs) % m))

    def compose(self, other: "MapElem") -> "MapElem":
        if self.m != other.m:
            raise SemigroupError(f"map sizes differ: {self.m} vs {other.m}")
        return MapElem(tuple(other.image[v] for v in self.image))

    def __call__(self, p):
        if not isinstance(p, Integral) or not 0 <= p < self.m:
            raise SemigroupError(f"point {p!r} not in Z_{self.m}")
        return self.image[p]


class KernelElem:
    """Markov kernel on Z_m (row-stochastic matrix); composition is the matrix product.

    ``apply`` returns the row, i.e. the law of the image point.  Kernels built
    from site coins keep ``theta`` for the n-point motion, which needs the coins
    themselves and not just the one-point transition law.
    """

    __slots__ = ("matrix", "theta")

    def __init__(self, matrix, theta=None):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise SemigroupError("kernel must be a square matrix")
        if (matrix < -_TOL).any() or not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-9):
            raise SemigroupError("kernel rows must be probability vectors")
        self.matrix = matrix
        self.theta = None if theta is None else np.asarray(theta, dtype=float)

    @classmethod
    def from_theta(cls, theta) -> "KernelElem":
        """Site x sends mass theta[x] to x+1 and 1-theta[x] to x-1 (mod m)."""
        theta = np.asarray(theta, dtype=float)
        m = theta.shape[0]
        if m < 3:
            raise SemigroupError("site-coin kernels need m >= 3")
        k = np.zeros((m, m))
        x = np.arange(m)
        k[x, (x + 1) % m] += theta
        k[x, (x - 1) % m] += 1.0 - theta
        return cls(k, theta)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def compose(self, other: "KernelElem") -> "KernelElem":
        if self.m != other.m:
            raise SemigroupError(f"kernel sizes differ: {self.m} vs {other.m}")
        return KernelElem(self.matrix @ other.matrix)

    def __call__(self, p):
        if not isinstance(p, Integral) or not 0 <= p < self.m:
            raise SemigroupError(f"point {p!r} not in Z_{self.m}")
        return self.matrix[p].copy()

    def __eq__(self, other):
        return isinstance(other, KernelElem) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"KernelElem(m={self.m})"


_trusted_coal = _trusted_maker(CoalElem)
_trusted_split = _trusted_maker(SplitElem)
_trusted_half_split = _trusted_maker(HalfSplitElem)
_trusted_sticky = _trusted_maker(StickyElem)

SemigroupElement = Union[ZmElem, CoalElem, SplitElem, HalfSplitElem, StickyElem, MapElem, KernelElem]

KINDS = ("zm", "coal", "split", "half-split", "sticky", "map", "kernel")


def identity(kind: str, m: int | None = None) -> SemigroupElement:
    """Neutral element of a semigroup; ``m`` is required for zm, map and kernel."""
    if kind == "coal":
        return CoalElem(0, 0)
    if kind == "split":
        # a + b = 0 makes the sign irrelevant: the flat part is the single point 0
        return SplitElem(0, 0, 1)
    if kind == "half-split":
        return HalfSplitElem(0, 0)
    if kind == "sticky":
        return StickyElem(0, 0, 0)
    if kind in ("zm", "map", "kernel"):
        if m is None:
            raise SemigroupError(f"identity({kind!r}) needs the modulus m")
        if kind == "zm":
            return ZmElem(m, 0)
        if kind == "map":
            return MapElem(tuple(range(m)))
        return KernelElem(np.eye(m))
    raise SemigroupError(f"unsupported semigroup kind {kind!r}")


def compose(x: SemigroupElement, y: SemigroupElement) -> SemigroupElement:
    """Product ``xy``: apply ``x`` first, then ``y``."""
    if type(x) is not type(y):
        raise SemigroupError(f"cannot compose {type(x).__name__} with {type(y).__name__}")
    return x.compose(y)


def apply(x: SemigroupElement, point):
    return x(point)


def radial_homomorphism(x) -> CoalElem:
    """Forget the sign (splitting) or the sticky level ``c``; keep ``(a, b)``."""
    if isinstance(x, (SplitElem, StickyElem, HalfSplitElem)):
        # (a, b) of a valid element already satisfies the coalescence constraints
        return _trusted_coal(x.a, x.b)
    raise SemigroupError(f"no radial part for {type(x).__name__}")


def coal_generators() -> dict:
    """``f_+(x) = x + 1`` and ``f_-(x) = max(0, x - 1)`` on the non-negative integers."""
    return {"+": CoalElem(1, 0), "-": CoalElem(-1, 1)}


def sticky_generators() -> dict:
    """``f_-`` as in the coalescing walk, ``f_+`` holds 0 at 0, ``f_*`` pushes 0 off."""
    return {"-": StickyElem(-1, 1, 0), "+": StickyElem(1, 0, 0), "*": StickyElem(1, 0, 1)}


def half_split_generators() -> dict:
    return {"+": HalfSplitElem(1, 0), "-": HalfSplitElem(-1, 1)}


def coal_compose_arrays(a1, b1, a2, b2):
    """Vectorised coalescence law on parameter arrays (used by batch folds)."""
    return a1 + a2, np.maximum(b1, b2 - a1)


def sticky_compose_arrays(a1, b1, c1, a2, b2, c2):
    a, b = coal_compose_arrays(a1, b1, a2, b2)
    return a, b, np.where(c1 > b2, a2 + c1, c2)
