"""Explicit constants and the box classification of non-negative solutions.

A profile u belongs to the box of an index set I when its sup over the
positivity interval I+_i exceeds rho exactly for i in I.  Boxes of
distinct index sets are disjoint, and the trivial solution sits in the box
of the empty set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BandHit, SpecError
from .indexset import IndexSet


def r_lambda(lam, sup_norm_a, p):
    """Lower bound (-lam/||a||)^(1/(p-1)) for the sup of a nontrivial solution."""
    if not lam < 0:
        raise SpecError(f"r_lambda needs lambda < 0, got {lam}")
    if not sup_norm_a > 0:
        raise SpecError("||a||_inf must be positive")
    if not p > 1:
        raise SpecError(f"p must exceed 1, got {p}")
    return (-lam / sup_norm_a) ** (1.0 / (p - 1.0))


@dataclass(frozen=True)
class ClassifierConfig:
    rho: float = 1.0
    R_cap: float = float("inf")
    margin: float = 1e-3

    def __post_init__(self):
        if not 0 < self.rho < self.R_cap:
            raise SpecError("need 0 < rho < R_cap")
        if not 0 <= self.margin < 1:
            raise SpecError("margin must lie in [0, 1)")

    def in_band(self, value) -> bool:
        return self.rho * (1 - self.margin) <= value <= self.rho * (1 + self.margin)


def interval_sups(values, x, pattern):
    """Max of the grid samples over each closed positivity interval."""
    out = []
    for s, t in pattern.positive_intervals():
        mask = (x >= s - 1e-14) & (x <= t + 1e-14)
        out.append(float(np.max(values[mask])) if np.any(mask) else 0.0)
    return out


def classify_sups(sups, cfg: ClassifierConfig) -> IndexSet:
    for i, v in enumerate(sups, start=1):
        if cfg.in_band(v):
            raise BandHit(f"sup over I+_{i} = {v:.6g} lies in the dead band around rho = {cfg.rho}")
    return IndexSet(tuple(i for i, v in enumerate(sups, start=1) if v > cfg.rho))


def classify(profile, pattern, cfg: ClassifierConfig) -> IndexSet:
    """Index set of the box containing ``profile``; BandHit inside the dead band."""
    if profile.sup >= cfg.R_cap:
        raise BandHit(f"||u|| = {profile.sup:.6g} is not below R_cap = {cfg.R_cap:.6g}")
    return classify_sups(profile.interval_sups(pattern), cfg)
