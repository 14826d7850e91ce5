"""Adaptive clinching auction for one divisible good, additive bidders, public budgets.

The price clock is integrated event by event. Between events the active set
A and the clinching set C are fixed, every clincher holds the same remaining
budget, and the remnant supply follows ``S(p) = S_e (p_e / p)^|C|``, so
quantities, payments and the next entry price all have closed forms.

Events:
  * ``enterClinch``: a bidder's rivals' demand falls to the remnant supply.
  * ``valueJump``: the clock reaches a bidder's value; it leaves A and the
    remaining bidders clinch ``[S - rivals' demand]^+`` at that price.
  * ``exhaust``: the remnant supply reaches zero.

Tied values are broken as if bidder i's value were ``v_i - i*eta`` with eta
infinitesimal: among equal values the higher index drops first. Bidders
with zero value or zero budget never hold positive demand and are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotAdditive, NumericalStall
from .model import INF, Instance, Outcome, normalized

_EQ = 1e-10
# remnant supply below this after a jump is rounding residue
_EXHAUSTED = 1e-12


@dataclass
class ClinchEvent:
    price: float
    kind: str
    deltas: dict[int, float] = field(default_factory=dict)
    supply_after: float = 0.0

    def to_dict(self):
        return {"price": self.price, "kind": self.kind,
                "deltas": {str(k): v for k, v in self.deltas.items()},
                "supply_after": self.supply_after}


@dataclass
class ClinchingTrace:
    events: list[ClinchEvent]
    interval: tuple[float, float]

    def to_dict(self):
        return {"interval": list(self.interval), "events": [e.to_dict() for e in self.events]}


class _Clock:
    def __init__(self, values: np.ndarray, budgets: np.ndarray):
        self.v = [float(a) for a in values]
        self.n = len(self.v)
        self.rem = [float(b) for b in budgets]
        self.x = [0.0] * self.n
        self.pay = [0.0] * self.n
        self.S = 1.0
        self.p = 0.0
        live = [i for i in range(self.n) if self.v[i] > 0 and self.rem[i] > 0]
        # lowest (value, -index) drops first
        self.drop_order = sorted(live, key=lambda i: (self.v[i], -i))
        self.active = set(live)
        self.C: set[int] = set()
        self.events: list[ClinchEvent] = []
        self.p0: float | None = None
        self.pf = 0.0

    def _moved(self, lo: float, hi: float) -> None:
        if self.p0 is None:
            self.p0 = lo
        self.pf = hi

    def _rivals(self, j: int) -> float:
        return sum(self.rem[k] for k in self.active if k != j)

    def _demand_sum(self, j: int, price: float) -> float:
        if price > 0:
            return self._rivals(j) / price
        return INF if any(self.rem[k] > 0 for k in self.active if k != j) else 0.0

    def jump(self, price: float, kind: str) -> None:
        deltas = {}
        for j in self.active:
            d = self.S - self._demand_sum(j, price)
            if d > 0:
                deltas[j] = d
        for j, d in deltas.items():
            self.x[j] += d
            self.pay[j] += price * d
            if self.rem[j] != INF:
                self.rem[j] = max(self.rem[j] - price * d, 0.0)
            self.S -= d
        if self.S <= _EXHAUSTED:
            self.S = 0.0
        if deltas:
            self._moved(price, price)
        if deltas or kind == "valueJump":
            self.events.append(ClinchEvent(price, kind, deltas, self.S))

    def refresh_clinchers(self) -> None:
        p, S = self.p, self.S
        self.C = set()
        if p <= 0:
            return
        for j in self.active:
            r = self._rivals(j)
            if r != INF and S * p >= r - _EQ * max(r, 1.0):
                self.C.add(j)

    def advance(self, q: float) -> None:
        """Continuous clinching from the current price to ``q``."""
        if q <= self.p or not self.C:
            self.p = max(self.p, q)
            return
        c = len(self.C)
        ratio = self.p / q
        S_new = self.S * ratio ** c
        dx = (self.S - S_new) / c
        if c == 1:
            dpay = self.S * self.p * math.log(q / self.p)
        else:
            dpay = self.S * self.p / (c - 1) * (1.0 - ratio ** (c - 1))
        for j in self.C:
            self.x[j] += dx
            self.pay[j] += dpay
            if self.rem[j] != INF:
                self.rem[j] = max(self.rem[j] - dpay, 0.0)
        self._moved(self.p, q)
        self.S = S_new
        self.p = q

    def next_entry(self) -> tuple[float, list[int]]:
        """Price at which the next bidder joins C, and who joins."""
        outside = [j for j in self.active if j not in self.C]
        if not outside:
            return INF, []
        if not self.C:
            top = max(self.rem[j] for j in outside)
            if top == INF:
                joiners = [j for j in outside if self.rem[j] == INF]
            else:
                joiners = [j for j in outside if self.rem[j] >= top - _EQ * max(top, 1.0)]
            r = self._rivals(joiners[0])
            if r == INF or self.S <= 0:
                return INF, []
            return max(r / self.S, self.p), joiners
        beta = self.rem[next(iter(self.C))]
        if beta == INF:
            return INF, []
        target = max(self.rem[j] for j in outside)
        if target == INF:
            return INF, []
        joiners = [j for j in outside if self.rem[j] >= target - _EQ * max(target, 1.0)]
        need = beta - target
        if need <= _EQ * max(beta, 1.0):
            return self.p, joiners
        c = len(self.C)
        scale = self.S * self.p
        if scale <= 0:
            return INF, []
        if c == 1:
            expo = need / scale
            return (self.p * math.exp(expo) if expo < 700 else INF), joiners
        lhs = need * (c - 1) / scale
        if lhs >= 1.0:
            return INF, []
        return self.p * (1.0 - lhs) ** (-1.0 / (c - 1)), joiners

    def run(self) -> None:
        self.jump(0.0, "enterClinch")
        guard = 0
        while self.S > 0 and self.drop_order:
            guard += 1
            if guard > 10_000 + 50 * self.n * self.n:
                raise NumericalStall("clinching event loop did not terminate")
            p_drop = self.v[self.drop_order[0]]
            p_enter, joiners = self.next_entry()
            if not math.isfinite(p_enter) and p_enter != INF:
                raise NumericalStall(f"non-finite entry price {p_enter}")
            if p_enter < p_drop:
                self.advance(p_enter)
                self.C.update(joiners)
                self.events.append(ClinchEvent(self.p, "enterClinch", {j: 0.0 for j in joiners}, self.S))
                continue
            self.advance(p_drop)
            leaver = self.drop_order.pop(0)
            self.active.discard(leaver)
            self.C.discard(leaver)
            self.jump(p_drop, "valueJump")
            self.refresh_clinchers()
        if self.events and self.S == 0.0:
            self.events.append(ClinchEvent(self.events[-1].price, "exhaust", {}, 0.0))

    def interval(self) -> tuple[float, float]:
        if self.p0 is None:
            return 0.0, 0.0
        return self.p0, self.pf


def clinching_auction(instance: Instance) -> tuple[Outcome, ClinchingTrace]:
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("clinching auction needs additive valuations")
    clock = _Clock(instance.values, instance.budgets)
    clock.run()
    trace = ClinchingTrace(clock.events, clock.interval())
    outcome = Outcome(np.array(clock.x), np.array(clock.pay), "clinching",
                      {"clinching_interval": trace.interval, "remnant_supply": clock.S})
    return outcome, trace


def clinching_epsilon_oracle(instance: Instance, epsilon: float) -> Outcome:
    """Discrete ascending clock with price step ``epsilon``.

    At each price every active bidder clinches ``[S - rivals' demand]^+``
    (capped by its own demand), all computed from the same snapshot. At
    price 0 a positive remaining budget means unbounded demand.
    """
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("clinching auction needs additive valuations")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    v = [float(a) for a in instance.values]
    rem = [float(b) for b in instance.budgets]
    n = len(v)
    x = [0.0] * n
    pay = [0.0] * n
    S = 1.0
    top = max(v, default=0.0)
    steps = int(math.ceil(top / epsilon)) + 1
    live = [i for i in range(n) if v[i] > 0 and rem[i] > 0]
    for t in range(steps + 1):
        if S <= 0:
            break
        p = t * epsilon
        active = [i for i in live if p < v[i]]
        if not active:
            break
        if p > 0:
            demand = [rem[i] / p for i in active]
        else:
            demand = [INF if rem[i] > 0 else 0.0 for i in active]
        total = sum(demand)
        grabs = []
        for k, i in enumerate(active):
            others = total - demand[k] if demand[k] != INF else sum(d for kk, d in enumerate(demand) if kk != k)
            d = S - others
            if d > 0:
                grabs.append((i, min(d, demand[k])))
        for i, d in grabs:
            x[i] += d
            pay[i] += p * d
            if rem[i] != INF:
                rem[i] = max(rem[i] - p * d, 0.0)
            S -= d
        S = max(S, 0.0)
    return Outcome(np.array(x), np.array(pay), "clinching-epsilon", {"epsilon": epsilon})
