"""Small exactly specified mechanisms.

Capped-value VCG for one indivisible item and for matching markets, the
two-bidder 4/3 auction, the random-dump baseline and two deliberately bad
mechanisms kept as negative controls.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InstanceError, NotAdditive
from .model import Instance, Outcome, normalized
from .myerson import AllocationRule, myerson_payment, payment_curve

_TIE = 1e-9


def capped_vickrey(values: Sequence[float], budgets: Sequence[float]) -> Outcome:
    """Second-price auction for one indivisible item on ``min(v_i, B_i)``."""
    capped = np.minimum(np.asarray(values, dtype=float), np.asarray(budgets, dtype=float))
    n = len(capped)
    if n == 0:
        raise InstanceError("no bidders")
    winner = int(np.argmax(capped))  # first maximum, so ties go to the lower index
    x = np.zeros(n)
    pay = np.zeros(n)
    x[winner] = 1.0
    rest = np.delete(capped, winner)
    pay[winner] = float(rest.max()) if rest.size else 0.0
    return Outcome(x, pay, "vickrey-capped", {"winner": winner, "capped_values": capped.tolist()})


@dataclass
class MatchingMarket:
    """n agents, n items; ``values[i, j]`` is agent i's value for item j."""

    values: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.budgets = np.asarray(self.budgets, dtype=float)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InstanceError(f"matching market needs a square value matrix, got {v.shape}")
        if self.budgets.shape != (v.shape[0],):
            raise InstanceError("one budget per agent required")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InstanceError("values must be finite and non-negative")
        if np.any(self.budgets < 0) or np.any(np.isnan(self.budgets)):
            raise InstanceError("budgets must be non-negative")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def capped(self) -> np.ndarray:
        return np.minimum(self.values, self.budgets[:, None])

    def to_dict(self):
        return {"values": self.values.tolist(),
                "budgets": ["inf" if b == np.inf else float(b) for b in self.budgets]}


def _max_weight(w: np.ndarray) -> float:
    if w.shape[0] == 0:
        return 0.0
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum())


def lexicographic_assignment(w: np.ndarray) -> tuple[float, np.ndarray]:
    """Max-weight perfect matching, ties broken toward the smallest permutation.

    Agents are fixed in index order, each to the lowest item that still
    admits an optimal completion.
    """
    n = w.shape[0]
    best = _max_weight(w)
    tol = _TIE * max(1.0, abs(best))
    sigma = np.full(n, -1)
    fixed = 0.0
    free_items = list(range(n))
    for i in range(n):
        for j in free_items:
            rest_items = [c for c in free_items if c != j]
            sub = w[np.ix_(range(i + 1, n), rest_items)]
            if fixed + w[i, j] + _max_weight(sub) >= best - tol:
                sigma[i] = j
                fixed += w[i, j]
                free_items = rest_items
                break
    return best, sigma


def capped_vcg_matching(market: MatchingMarket) -> Outcome:
    """VCG on capped values; payment_i is the externality i imposes."""
    w = market.capped
    n = market.n
    best, sigma = lexicographic_assignment(w)
    pay = np.zeros(n)
    for i in range(n):
        without = _max_weight(np.delete(w, i, axis=0))
        pay[i] = max(without - (best - w[i, sigma[i]]), 0.0)
    x = np.zeros((n, n))
    x[np.arange(n), sigma] = 1.0
    return Outcome(x, pay, "vcg-matching",
                   {"assignment": sigma.tolist(), "liquid_welfare": best})


def matching_liquid_welfare(market: MatchingMarket, assignment: Sequence[int]) -> float:
    w = market.capped
    return float(sum(w[i, j] for i, j in enumerate(assignment)))


def _rule_43(i: int, u: float, reports: Sequence[float]) -> float:
    other = reports[1 - i]
    if u == other:
        return 0.5
    high, low = (u, other) if u > other else (other, u)
    if low <= 1.0 / 3.0:
        share_high = 1.0
    elif low <= 1.0:
        share_high = 0.25 + 0.25 / low
    else:
        share_high = 0.5
    return share_high if u > other else 1.0 - share_high


RULE_43 = AllocationRule(_rule_43, lambda i, reports: (1.0 / 3.0, 1.0))


def two_bidder_43(v1: float, v2: float, budget: float = 1.0) -> Outcome:
    """Two bidders sharing a common budget; values are rescaled to budget 1."""
    if v1 < 0 or v2 < 0:
        raise InstanceError("values must be non-negative")
    if not budget > 0 or not np.isfinite(budget):
        raise InstanceError("common budget must be positive and finite")
    reports = [v1 / budget, v2 / budget]
    x = np.array([RULE_43(i, reports[i], reports) for i in range(2)])
    pay = np.array([myerson_payment(RULE_43, i, reports) for i in range(2)]) * budget
    return Outcome(x, pay, "two-bidder-43", {"budget": budget})


def two_bidder_43_deviations(v: Sequence[float], budget: float, i: int,
                             reports: Sequence[float]) -> list[tuple[float, float]]:
    scaled = [a / budget for a in v]
    curve = payment_curve(RULE_43, i, scaled, [r / budget for r in reports])
    return [(x, p * budget) for x, p in curve]


def common_budget(instance: Instance) -> float:
    b = instance.budgets
    if instance.n != 2 or b[0] != b[1]:
        raise InstanceError("the 4/3 auction needs exactly two bidders with a common budget")
    return float(b[0])


def random_dump(instance: Instance, seed: int) -> Outcome:
    """Whole good to a uniformly random bidder, nobody pays."""
    n = instance.n
    if n == 0:
        raise InstanceError("no bidders")
    winner = int(np.random.default_rng(seed).integers(n))
    x = np.zeros(n)
    x[winner] = 1.0
    return Outcome(x, np.zeros(n), "random-dump", {"winner": winner, "seed": seed})


def per_unit_capped_vcg(instance: Instance) -> Outcome:
    """Quasi-linear VCG on per-unit values ``min(v_i, B_i)``.

    Kept only to show why the naive reduction fails for a divisible good:
    the whole unit goes to the top capped per-unit value, whose budget may
    cover a tiny fraction of the welfare at stake.
    """
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("per-unit reduction needs additive valuations")
    out = capped_vickrey(instance.values, instance.budgets)
    out.mechanism = "per-unit-capped-vcg"
    return out


def broken_first_price(instance: Instance) -> Outcome:
    """Highest value wins the whole unit and pays its report. Not truthful."""
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("first price needs additive valuations")
    v = instance.values
    winner = int(np.argmax(v))
    x = np.zeros(instance.n)
    pay = np.zeros(instance.n)
    x[winner] = 1.0
    pay[winner] = float(v[winner])
    return Outcome(x, pay, "broken-first-price", {"winner": winner})
