"""Discrete flows, noise sensitivity and exact chaos computations."""
from . import chaos, estimators, flows, perturb, semigroups, sticky_exact, streams

__version__ = "0.1.0"

__all__ = ["chaos", "estimators", "flows", "perturb", "semigroups", "sticky_exact", "streams"]
