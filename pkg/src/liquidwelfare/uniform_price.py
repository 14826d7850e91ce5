"""Uniform price auction: market-clearing allocation with Myerson payments."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotAdditive
from .model import Instance, Outcome, normalized
from .myerson import AllocationRule, myerson_payment, payment_curve


@dataclass
class ClearingResult:
    k: int
    case: str
    clearing_price: float
    allocation: np.ndarray

    def to_dict(self):
        return {"k": self.k, "case": self.case, "clearing_price": self.clearing_price,
                "allocation": self.allocation.tolist()}


def clear(values: Sequence[float], budgets: Sequence[float]) -> ClearingResult:
    """Market clearing on raw value/budget vectors (one unit of supply).

    Bidders are ranked by value, ties to the lower index. ``k`` is the
    longest prefix whose total budget is at most the value of its last member.
    """
    n = len(values)
    order = sorted(range(n), key=lambda i: (-values[i], i))
    x = np.zeros(n)
    k, prefix = 0, 0.0
    for t, i in enumerate(order):
        if prefix + budgets[i] <= values[i]:
            prefix += budgets[i]
            k = t + 1
        else:
            break
    v_next = values[order[k]] if k < n else 0.0
    if prefix > v_next:
        for i in order[:k]:
            x[i] = budgets[i] / prefix
        return ClearingResult(k, "I", prefix, x)
    if v_next > 0:
        for i in order[:k]:
            x[i] = budgets[i] / v_next
    if k < n:
        x[order[k]] = max(1.0 - x.sum(), 0.0)
    elif n:
        # every budget is zero and so is every value beyond them
        x[order[0]] = 1.0
    return ClearingResult(k, "II", v_next, x)


def uniform_price_allocation(instance: Instance) -> ClearingResult:
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("uniform price auction needs additive valuations")
    return clear([float(v) for v in instance.values], [float(b) for b in instance.budgets])


def uniform_price_rule(budgets: Sequence[float]) -> AllocationRule:
    """Bidder i's clearing quantity as a function of its reported value."""
    budgets = [float(b) for b in budgets]

    def func(i, u, reports):
        vals = list(reports)
        vals[i] = u
        return clear(vals, budgets).allocation[i]

    def hints(i, reports):
        # i's quantity changes formula where u crosses a prefix sum P_t of the
        # budgets ranked above it, or P_t + B_i
        others = sorted((j for j in range(len(reports)) if j != i), key=lambda j: (-reports[j], j))
        pts, acc = [0.0, budgets[i]], 0.0
        for j in others:
            acc += budgets[j]
            pts.extend((acc, acc + budgets[i]))
        return pts

    return AllocationRule(func, hints)


def uniform_price_auction(instance: Instance) -> Outcome:
    instance = normalized(instance)
    res = uniform_price_allocation(instance)
    values = [float(v) for v in instance.values]
    rule = uniform_price_rule(instance.budgets)
    pay = np.array([myerson_payment(rule, i, values) for i in range(instance.n)])
    return Outcome(res.allocation, pay, "uniform", {"clearing": res.to_dict()})


def uniform_deviations(instance: Instance, i: int, reports: Sequence[float]) -> list[tuple[float, float]]:
    """``(x_i, payment_i)`` for each report of bidder i, others truthful."""
    instance = normalized(instance)
    values = [float(v) for v in instance.values]
    return payment_curve(uniform_price_rule(instance.budgets), i, values, reports)
