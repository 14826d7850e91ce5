"""Estimate-and-Price for piecewise-linear valuations with private budgets.

Half of the good is cut into ``k = ceil(8 log2 n)`` equal segments priced
``2^j / 8 * anchor``. Bidders other than an excluded one walk the segments in
index order, each buying the profit-maximising contiguous stretch starting at
the first unsold point. The pivot (largest capped value of one half) is
priced against the runner-up instead.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewBidders
from .model import Bidder, Instance, Outcome, Valuation, capped_value, normalized

log = logging.getLogger(__name__)

_PROFIT_TIE = 1e-12


def segment_count_for(n: int) -> int:
    return max(1, math.ceil(8 * math.log2(n))) if n >= 2 else 1


class PriceSchedule:
    """Piecewise-constant unit price on ``[0, 1/2]``."""

    def __init__(self, k: int, anchor: float):
        if k < 1:
            raise ValueError("segment count must be positive")
        self.k = int(k)
        self.anchor = float(anchor)
        self.length = 1.0 / (2 * self.k)
        self.bounds = np.arange(self.k + 1) / (2.0 * self.k)
        self.prices = np.array([2.0 ** j / 8.0 * self.anchor for j in range(1, self.k + 1)])
        # cost of [0, bounds[j]]
        self.cum = np.concatenate(([0.0], np.cumsum(self.prices * self.length)))

    def cost(self, t: float) -> float:
        """Integral of the price over ``[0, t]``, with ``t`` clipped to ``[0, 1/2]``."""
        t = min(max(t, 0.0), 0.5)
        j = min(int(np.searchsorted(self.bounds, t, side="right")) - 1, self.k - 1)
        return float(self.cum[j] + self.prices[j] * (t - self.bounds[j]))

    def reach(self, c: float) -> float:
        """Largest ``t`` with ``cost(t) <= c``."""
        if c >= self.cum[-1]:
            return 0.5
        if c <= 0:
            return 0.0
        j = int(np.searchsorted(self.cum, c, side="right")) - 1
        return float(min(self.bounds[j] + (c - self.cum[j]) / self.prices[j], self.bounds[j + 1]))

    def price_at(self, t: float) -> float:
        j = min(int(np.searchsorted(self.bounds, t, side="right")) - 1, self.k - 1)
        return float(self.prices[max(j, 0)])

    def to_dict(self):
        return {"k": self.k, "anchor": self.anchor, "segment_length": self.length}


def demand(valuation: Valuation, budget: float, schedule: PriceSchedule, start: float) -> tuple[float, float]:
    """Budget-feasible profit-maximising quantity from ``start``, and its cost.

    Profit is piecewise linear in the quantity, so the maximum sits on a
    valuation kink, a segment boundary, or the budget-binding quantity.
    Ties go to the smallest quantity.
    """
    room = 0.5 - start
    if room <= 0:
        return 0.0, 0.0
    base = schedule.cost(start)
    top = room
    if budget != math.inf:
        top = min(room, max(schedule.reach(base + budget) - start, 0.0))
    cands = {0.0, top}
    cands.update(q for q in valuation.kinks() if 0.0 < q < top)
    cands.update(b - start for b in schedule.bounds if 0.0 < b - start < top)
    best_x, best_p, best_u = 0.0, 0.0, 0.0
    for x in sorted(cands):
        pay = schedule.cost(start + x) - base
        u = valuation(x) - pay
        if u > best_u + _PROFIT_TIE * max(1.0, abs(best_u)):
            best_x, best_p, best_u = x, pay, u
    return best_x, best_p


@dataclass
class LedgerEntry:
    bidder: int
    start: float
    quantity: float
    payment: float

    def to_dict(self):
        return {"bidder": self.bidder, "start": self.start, "quantity": self.quantity,
                "payment": self.payment}


@dataclass
class GreedyLedger:
    excluded: int
    schedule: PriceSchedule | None
    entries: list[LedgerEntry] = field(default_factory=list)

    @property
    def sold(self) -> float:
        return sum(e.quantity for e in self.entries)

    def entry(self, i: int) -> LedgerEntry | None:
        for e in self.entries:
            if e.bidder == i:
                return e
        return None

    def to_dict(self):
        return {"excluded": self.excluded,
                "schedule": self.schedule.to_dict() if self.schedule else None,
                "entries": [e.to_dict() for e in self.entries]}


def sell_without(instance: Instance, excluded: int, anchor: float | None = None,
                 segment_count: int | None = None) -> GreedyLedger:
    """Sell half the good to everyone but ``excluded``, in index order."""
    instance = normalized(instance)
    if anchor is None:
        b = instance.bidders[excluded]
        anchor = capped_value(b.valuation, b.budget, 0.5)
    if instance.n < 2 or anchor <= 0:
        return GreedyLedger(excluded, None)
    schedule = PriceSchedule(segment_count or segment_count_for(instance.n), anchor)
    ledger = GreedyLedger(excluded, schedule)
    z = 0.0
    for i, b in enumerate(instance.bidders):
        if i == excluded:
            continue
        x, pay = demand(b.valuation, b.budget, schedule, z)
        ledger.entries.append(LedgerEntry(i, z, x, pay))
        z += x
    return ledger


def rank_pivots(caps: list[float]) -> tuple[int, int]:
    order = sorted(range(len(caps)), key=lambda i: (-caps[i], i))
    return order[0], order[1]


def _pivot_choice(bidder: Bidder, bundle: tuple[float, float], runner_up_cap: float):
    """Pivot's outcome: ``(x, pay, choice)``."""
    x2, p2 = bundle
    price = 2.0 * runner_up_cap
    if bidder.valuation(x2) - p2 >= bidder.valuation(0.5) - price:
        return x2, p2, "bundle"
    if price <= bidder.budget:
        return 0.5, price, "half"
    return x2, p2, "bundle-guard"


def estimate_and_price(instance: Instance, segment_count: int | None = None) -> Outcome:
    instance = normalized(instance)
    n = instance.n
    if n < 2:
        raise TooFewBidders(f"estimate-and-price needs at least 2 bidders, got {n}")
    caps = [capped_value(b.valuation, b.budget, 0.5) for b in instance.bidders]
    r1, r2 = rank_pivots(caps)
    x = np.zeros(n)
    pay = np.zeros(n)
    if caps[r1] <= 0:
        return Outcome(x, pay, "estimate-and-price", {"pivot": r1, "runner_up": r2, "choice": "zero"})
    led1 = sell_without(instance, r1, caps[r1], segment_count)
    led2 = sell_without(instance, r2, caps[r2], segment_count)
    for e in led1.entries:
        x[e.bidder] = e.quantity
        pay[e.bidder] = e.payment
    e2 = led2.entry(r1)
    bundle = (e2.quantity, e2.payment) if e2 else (0.0, 0.0)
    x[r1], pay[r1], choice = _pivot_choice(instance.bidders[r1], bundle, caps[r2])
    if choice == "bundle-guard":
        log.info("pivot %d cannot afford the half at %.6g (budget %.6g); kept the bundle",
                 r1, 2 * caps[r2], instance.bidders[r1].budget)
    diag = {"pivot": r1, "runner_up": r2, "choice": choice, "guard_bound": choice == "bundle-guard",
            "half_price": 2 * caps[r2], "ledger_without_pivot": led1.to_dict(),
            "ledger_without_runner_up": led2.to_dict()}
    return Outcome(x, pay, "estimate-and-price", diag)


class DeviationOracle:
    """Bidder i's (x, pay) under a misreport, others truthful.

    A bidder's start point in Sell-Without-r depends only on the bidders
    before it, so truthful starts are cached per excluded bidder and each
    misreport costs one ranking plus one demand call.
    """

    def __init__(self, instance: Instance, segment_count: int | None = None):
        self.instance = normalized(instance)
        if self.instance.n < 2:
            raise TooFewBidders("estimate-and-price needs at least 2 bidders")
        self.k = segment_count or segment_count_for(self.instance.n)
        self.caps = [capped_value(b.valuation, b.budget, 0.5) for b in self.instance.bidders]
        self._starts: dict[int, dict[int, float]] = {}

    def _start(self, r: int, i: int) -> float:
        if r not in self._starts:
            led = sell_without(self.instance, r, self.caps[r], self.k)
            self._starts[r] = {e.bidder: e.start for e in led.entries}
        return self._starts[r].get(i, 0.0)

    def outcome(self, i: int, bidder: Bidder) -> tuple[float, float]:
        caps = list(self.caps)
        caps[i] = capped_value(bidder.valuation, bidder.budget, 0.5)
        r1, r2 = rank_pivots(caps)
        if caps[r1] <= 0:
            return 0.0, 0.0
        if i != r1:
            sched = PriceSchedule(self.k, caps[r1])
            return demand(bidder.valuation, bidder.budget, sched, self._start(r1, i))
        if caps[r2] > 0:
            bundle = demand(bidder.valuation, bidder.budget, PriceSchedule(self.k, caps[r2]),
                            self._start(r2, i))
        else:
            bundle = (0.0, 0.0)
        x, pay, _ = _pivot_choice(bidder, bundle, caps[r2])
        return x, pay
