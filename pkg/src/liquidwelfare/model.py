"""Domain types: valuations, bidders, instances, outcomes and liquid welfare.

Quantities are fractions of a single divisible unit. ``validate`` rescales any
instance with ``supply != 1`` so that every mechanism works on one unit.
Budgets are plain floats; ``math.inf`` is the unbounded budget.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from typing import Any, Sequence, Union

import numpy as np

from .errors import (
    ConcavityFlagViolated,
    EmptyInstance,
    InfeasibleAllocation,
    InstanceError,
    NegativeValue,
    NonMonotoneValuation,
    NotAdditive,
)

INF = math.inf

# Solver-internal comparisons vs. audit verdicts.
SOLVER_TOL = 1e-9
AUDIT_TOL = 1e-6


def _clamp01(q: float) -> float:
    return 0.0 if q < 0.0 else (1.0 if q > 1.0 else q)


@dataclass(frozen=True)
class Additive:
    """Linear valuation ``v(q) = value * q``."""

    value: float

    concave = True

    def __call__(self, q: float) -> float:
        return self.value * _clamp01(q)

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        return self.value * np.clip(q, 0.0, 1.0)

    @property
    def breakpoints(self) -> tuple[tuple[float, float], ...]:
        return ((0.0, 0.0), (1.0, self.value))

    def kinks(self) -> tuple[float, ...]:
        return (0.0, 1.0)

    def max_slope(self) -> float:
        return self.value

    def scaled(self, factor: float) -> "Additive":
        return Additive(self.value * factor)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Monotone piecewise-linear valuation through ``(0, 0)``.

    Between breakpoints the value is interpolated exactly. Past the last
    breakpoint the last segment's slope continues up to ``q = 1``.
    ``concave=True`` asserts non-increasing slopes (checked by ``validate``).
    """

    breakpoints: tuple[tuple[float, float], ...]
    concave: bool = False
    _qs: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _vs: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple((float(q), float(v)) for q, v in self.breakpoints)
        if not pts or pts[0] != (0.0, 0.0):
            raise InstanceError("piecewise-linear valuation must start at (0, 0)")
        qs = tuple(p[0] for p in pts)
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise InstanceError("breakpoint quantities must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "_qs", qs)
        object.__setattr__(self, "_vs", tuple(p[1] for p in pts))

    @property
    def slopes(self) -> tuple[float, ...]:
        qs, vs = self._qs, self._vs
        return tuple((vs[j + 1] - vs[j]) / (qs[j + 1] - qs[j]) for j in range(len(qs) - 1))

    def _tail_slope(self) -> float:
        s = self.slopes
        return s[-1] if s else 0.0

    def __call__(self, q: float) -> float:
        q = _clamp01(q)
        qs, vs = self._qs, self._vs
        if q >= qs[-1]:
            return vs[-1] + self._tail_slope() * (q - qs[-1])
        j = bisect_right(qs, q) - 1
        q0, q1 = qs[j], qs[j + 1]
        return vs[j] + (vs[j + 1] - vs[j]) * (q - q0) / (q1 - q0)

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        qs, vs = self._qs, self._vs
        out = np.interp(q, qs, vs)
        tail = q > qs[-1]
        if np.any(tail):
            out[tail] = vs[-1] + self._tail_slope() * (q[tail] - qs[-1])
        return out

    def kinks(self) -> tuple[float, ...]:
        return tuple(q for q in self._qs if q <= 1.0) + ((1.0,) if self._qs[-1] < 1.0 else ())

    def max_slope(self) -> float:
        s = self.slopes
        return max(s) if s else 0.0

    def scaled(self, factor: float) -> "PiecewiseLinear":
        return PiecewiseLinear(tuple((q, v * factor) for q, v in self.breakpoints), self.concave)


Valuation = Union[Additive, PiecewiseLinear]


@dataclass(frozen=True)
class Bidder:
    valuation: Valuation
    budget: float = INF


@dataclass(frozen=True)
class Instance:
    bidders: tuple[Bidder, ...]
    supply: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bidders", tuple(self.bidders))

    @classmethod
    def additive(cls, values: Sequence[float], budgets: Sequence[float] | None = None,
                 supply: float = 1.0) -> "Instance":
        if budgets is None:
            budgets = [INF] * len(values)
        if len(budgets) != len(values):
            raise InstanceError("values and budgets differ in length")
        return cls(tuple(Bidder(Additive(float(v)), float(b)) for v, b in zip(values, budgets)),
                   float(supply))

    @property
    def n(self) -> int:
        return len(self.bidders)

    @property
    def is_additive(self) -> bool:
        return all(isinstance(b.valuation, Additive) for b in self.bidders)

    @property
    def values(self) -> np.ndarray:
        """Per-unit values; only defined for additive instances."""
        if not self.is_additive:
            raise NotAdditive("instance has non-additive valuations")
        return np.array([b.valuation.value for b in self.bidders], dtype=float)

    @property
    def budgets(self) -> np.ndarray:
        return np.array([b.budget for b in self.bidders], dtype=float)

    def with_bidder(self, i: int, bidder: Bidder) -> "Instance":
        bidders = list(self.bidders)
        bidders[i] = bidder
        return replace(self, bidders=tuple(bidders))


@dataclass
class Outcome:
    allocation: np.ndarray
    payments: np.ndarray
    mechanism: str = ""
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.allocation = np.asarray(self.allocation, dtype=float)
        self.payments = np.asarray(self.payments, dtype=float)

    @property
    def revenue(self) -> float:
        return float(self.payments.sum())

    def to_dict(self) -> dict[str, Any]:
        return {
            "mechanism": self.mechanism,
            "allocation": self.allocation.tolist(),
            "payments": self.payments.tolist(),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return "inf" if f == INF else f
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def _check_number(x: float, what: str) -> None:
    if math.isnan(x):
        raise InstanceError(f"{what} is NaN")
    if x < 0:
        raise NegativeValue(f"{what} is negative: {x}")


def _check_valuation(val: Valuation, i: int) -> None:
    if isinstance(val, Additive):
        _check_number(val.value, f"value of bidder {i}")
        if math.isinf(val.value):
            raise InstanceError(f"value of bidder {i} is infinite")
        return
    for q, v in val.breakpoints:
        _check_number(v, f"breakpoint value of bidder {i}")
        if math.isinf(v) or math.isinf(q):
            raise InstanceError(f"breakpoint of bidder {i} is infinite")
        if q > 1.0 + SOLVER_TOL:
            raise InstanceError(f"breakpoint of bidder {i} lies beyond the supply")
    slopes = val.slopes
    if any(s < 0 for s in slopes):
        raise NonMonotoneValuation(f"valuation of bidder {i} decreases")
    if val.concave and any(b > a * (1 + SOLVER_TOL) + SOLVER_TOL for a, b in zip(slopes, slopes[1:])):
        raise ConcavityFlagViolated(f"valuation of bidder {i} is flagged concave but slopes increase")


def validate(instance: Instance) -> Instance:
    """Check an instance and rescale it to one unit of supply.

    Additive per-unit values are multiplied by the supply; piecewise-linear
    breakpoint quantities (given in units of the original supply) are divided
    by it. Budgets are untouched.
    """
    if instance.n == 0:
        raise EmptyInstance("instance has no bidders")
    s = float(instance.supply)
    if not (s > 0) or math.isinf(s):
        raise InstanceError(f"supply must be positive and finite, got {s}")
    bidders = []
    for i, b in enumerate(instance.bidders):
        _check_number(b.budget, f"budget of bidder {i}")
        val = b.valuation
        if isinstance(val, Additive):
            _check_valuation(val, i)
            val = Additive(val.value * s)
        else:
            if s != 1.0:
                val = PiecewiseLinear(tuple((q / s, v) for q, v in val.breakpoints), val.concave)
            _check_valuation(val, i)
        bidders.append(Bidder(val, float(b.budget)))
    return Instance(tuple(bidders), 1.0)


def normalized(instance: Instance) -> Instance:
    """Return ``instance`` if already on one unit, else ``validate(instance)``."""
    return instance if instance.supply == 1.0 and instance.n > 0 else validate(instance)


def utility(valuation: Valuation, budget: float, x: float, pay: float, slack: float = 0.0) -> float:
    """Budgeted quasi-linear utility; ``-inf`` once ``pay`` exceeds the budget."""
    if pay > budget + slack:
        return -INF
    return valuation(x) - pay


def capped_value(valuation: Valuation, budget: float, q: float) -> float:
    return min(valuation(q), budget)


def liquid_welfare(instance: Instance, allocation: Sequence[float], tol: float = SOLVER_TOL) -> float:
    x = np.asarray(allocation, dtype=float)
    if x.shape != (instance.n,):
        raise InfeasibleAllocation(f"allocation has shape {x.shape}, expected ({instance.n},)")
    if x.sum() > 1.0 + tol or np.any(x < -tol):
        raise InfeasibleAllocation(f"allocation sums to {x.sum()}")
    return float(sum(capped_value(b.valuation, b.budget, xi) for b, xi in zip(instance.bidders, x)))


def welfare(instance: Instance, allocation: Sequence[float]) -> float:
    return float(sum(b.valuation(xi) for b, xi in zip(instance.bidders, allocation)))
