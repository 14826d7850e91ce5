"""Name -> mechanism registry used by the audit harness and the CLI.

Every mechanism runs on a ``problem``: an ``Instance`` for everything except
``vcg-matching``, which takes a ``MatchingMarket``. A misreport is a pair
``(value_factor, budget_factor)`` applied to one bidder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .clinching import clinching_auction
from .errors import UnknownMechanism
from .estimate_and_price import DeviationOracle, estimate_and_price
from .model import Bidder, Instance, Outcome, capped_value, liquid_welfare, normalized
from .oracle import optimal_lw
from .special import (MatchingMarket, broken_first_price, capped_vcg_matching, capped_vickrey,
                      common_budget, lexicographic_assignment, matching_liquid_welfare,
                      random_dump, two_bidder_43, two_bidder_43_deviations)
from .uniform_price import uniform_deviations, uniform_price_auction

Misreport = tuple[float, float]


def misreport_bidder(bidder: Bidder, f: float, g: float) -> Bidder:
    return Bidder(bidder.valuation.scaled(f), bidder.budget * g)


def _run_each(run: Callable[[Instance], Outcome]):
    def deviations(problem: Instance, i: int, misreports: Sequence[Misreport]):
        out = []
        for f, g in misreports:
            inst = problem.with_bidder(i, misreport_bidder(problem.bidders[i], f, g))
            o = run(inst)
            out.append((float(o.allocation[i]), float(o.payments[i])))
        return out
    return deviations


@dataclass
class Mechanism:
    name: str
    run: Callable[[Any], Outcome]
    private_budgets: bool = False
    ratio_bound: Callable[[int], float] | None = None
    deviations: Callable[[Any, int, Sequence[Misreport]], list[tuple[float, float]]] | None = None
    problem_kind: str = "divisible"  # divisible | indivisible | matching
    seeded: bool = False

    def outcomes_for(self, problem, i: int, misreports: Sequence[Misreport]):
        if self.deviations is not None:
            return self.deviations(problem, i, misreports)
        return _run_each(self.run)(problem, i, misreports)

    def value_of(self, problem, i: int, x_i) -> float:
        """True value bidder i derives from its share ``x_i``."""
        if self.problem_kind == "matching":
            return float(np.dot(problem.values[i], x_i))
        return float(problem.bidders[i].valuation(float(x_i)))

    def budget_of(self, problem, i: int) -> float:
        if self.problem_kind == "matching":
            return float(problem.budgets[i])
        return float(problem.bidders[i].budget)

    def liquid_welfare(self, problem, outcome: Outcome) -> float:
        if self.problem_kind == "matching":
            return matching_liquid_welfare(problem, outcome.diagnostics["assignment"])
        return liquid_welfare(problem, outcome.allocation)

    def optimum(self, problem, resolution: int = 1000) -> float:
        if self.problem_kind == "matching":
            return lexicographic_assignment(problem.capped)[0]
        if self.problem_kind == "indivisible":
            return float(max(capped_value(b.valuation, b.budget, 1.0) for b in problem.bidders))
        return optimal_lw(problem, resolution).optimum


def _uniform_dev(problem, i, misreports):
    v = normalized(problem).values
    return uniform_deviations(problem, i, [float(v[i]) * f for f, _ in misreports])


def _vickrey(problem: Instance) -> Outcome:
    p = normalized(problem)
    return capped_vickrey(p.values, p.budgets)


def _matching_dev(problem: MatchingMarket, i, misreports):
    out = []
    for f, g in misreports:
        v = problem.values.copy()
        v[i] *= f
        b = problem.budgets.copy()
        b[i] *= g
        o = capped_vcg_matching(MatchingMarket(v, b))
        out.append((o.allocation[i], float(o.payments[i])))
    return out


def _43(problem: Instance) -> Outcome:
    p = normalized(problem)
    v = p.values
    return two_bidder_43(float(v[0]), float(v[1]), common_budget(p))


def _43_dev(problem, i, misreports):
    p = normalized(problem)
    v = [float(a) for a in p.values]
    return two_bidder_43_deviations(v, common_budget(p), i, [v[i] * f for f, _ in misreports])


def _ep_dev(problem, i, misreports):
    oracle = DeviationOracle(problem)
    b = oracle.instance.bidders[i]
    return [oracle.outcome(i, misreport_bidder(b, f, g)) for f, g in misreports]


def _clinching(problem):
    return clinching_auction(problem)[0]


def _random_dump(problem, seed: int = 0):
    return random_dump(problem, seed)


REGISTRY: dict[str, Mechanism] = {m.name: m for m in [
    Mechanism("clinching", _clinching, ratio_bound=lambda n: 2.0),
    Mechanism("uniform", uniform_price_auction, ratio_bound=lambda n: 2.0, deviations=_uniform_dev),
    Mechanism("vickrey-capped", _vickrey, ratio_bound=lambda n: 1.0, problem_kind="indivisible"),
    Mechanism("vcg-matching", capped_vcg_matching, ratio_bound=lambda n: 1.0,
              deviations=_matching_dev, problem_kind="matching"),
    Mechanism("two-bidder-43", _43, ratio_bound=lambda n: 4.0 / 3.0, deviations=_43_dev),
    Mechanism("estimate-and-price", estimate_and_price, private_budgets=True,
              ratio_bound=lambda n: 20.0 * math.log2(max(n, 2)), deviations=_ep_dev),
    Mechanism("random-dump", _random_dump, seeded=True),
    Mechanism("broken-first-price", broken_first_price),
]}


def get(name: str) -> Mechanism:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownMechanism(f"unknown mechanism {name!r}; known: {', '.join(REGISTRY)}") from None
