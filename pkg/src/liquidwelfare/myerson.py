"""Payments from monotone single-parameter allocation rules.

``payment = v_i * x_i(v) - integral_0^{v_i} x_i(u, v_-i) du``

The integral is split at every known breakpoint of the rule (the caller's
hints plus the other bidders' reports) and each piece is integrated by
adaptive Gauss-Legendre: a panel is accepted once its one-panel and
two-half-panel estimates agree. Rules must hint every jump: a step lying
between a panel edge and its first node is invisible to the quadrature, so
an unhinted jump can cost up to ``jump * width`` of the panel holding it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonConvergentQuadrature, RuleEvaluationFailed

MIN_WIDTH = 1e-12
REL_TOL = 1e-12
MAX_EVALS = 500_000

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = tuple(float(t) for t in _GL_NODES)
_GL_WEIGHTS = tuple(float(w) for w in _GL_WEIGHTS)

RuleFunc = Callable[[int, float, Sequence[float]], float]
HintFunc = Callable[[int, Sequence[float]], Iterable[float]]


@dataclass(frozen=True)
class AllocationRule:
    """``func(i, u, reports)`` is bidder i's quantity when reporting ``u``.

    ``reports[i]`` is ignored by ``func``; the other entries are held fixed.
    ``hints(i, reports)`` lists values of ``u`` where the rule may jump or
    change formula. The rule must be safe to call concurrently.
    """

    func: RuleFunc
    hints: HintFunc | None = None

    def __call__(self, i: int, u: float, reports: Sequence[float]) -> float:
        try:
            return float(self.func(i, u, reports))
        except Exception as exc:  # surfaced with the offending point
            raise RuleEvaluationFailed(f"rule failed for bidder {i} at u={u}: {exc}") from exc

    def breakpoints(self, i: int, reports: Sequence[float]) -> list[float]:
        pts = [float(r) for j, r in enumerate(reports) if j != i]
        if self.hints is not None:
            pts.extend(float(h) for h in self.hints(i, reports))
        return [p for p in pts if math.isfinite(p)]


class _Integrator:
    def __init__(self, f: Callable[[float], float]):
        self.f = f
        self.evals = 0

    def _gl(self, a: float, b: float) -> float:
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        f = self.f
        self.evals += len(_GL_NODES)
        return half * sum(w * f(mid + half * t) for t, w in zip(_GL_NODES, _GL_WEIGHTS))

    def smooth_piece(self, a: float, b: float, span: float) -> float:
        if b <= a:
            return 0.0
        total = 0.0
        stack = [(a, b, self._gl(a, b))]
        while stack:
            lo, hi, whole = stack.pop()
            mid = 0.5 * (lo + hi)
            left, right = self._gl(lo, mid), self._gl(mid, hi)
            if self.evals > MAX_EVALS:
                raise NonConvergentQuadrature(f"no convergence on [{a}, {b}] after {self.evals} evaluations")
            if abs(left + right - whole) <= REL_TOL * max(span, 1.0) * (hi - lo) / span \
                    or hi - lo <= MIN_WIDTH * max(span, 1.0):
                total += left + right
            else:
                stack.append((lo, mid, left))
                stack.append((mid, hi, right))
        return total


def _integral(f: Callable[[float], float], upper: float, breaks: Iterable[float]) -> float:
    if upper <= 0:
        return 0.0
    knots = sorted({0.0, upper, *(p for p in breaks if 0.0 < p < upper)})
    integ = _Integrator(f)
    return sum(integ.smooth_piece(a, b, upper) for a, b in zip(knots, knots[1:]))


def myerson_payment(rule: AllocationRule, i: int, reports: Sequence[float]) -> float:
    reports = [float(r) for r in reports]
    vi = reports[i]
    if vi <= 0:
        return 0.0

    def f(u: float) -> float:
        return rule(i, u, reports)

    area = _integral(f, vi, rule.breakpoints(i, reports))
    return vi * f(vi) - area


def payment_curve(rule: AllocationRule, i: int, reports: Sequence[float],
                  values: Sequence[float]) -> list[tuple[float, float]]:
    """``(x_i, payment_i)`` for each alternative report in ``values``.

    Equivalent to calling ``myerson_payment`` once per value, but sweeps the
    integral once from 0 to ``max(values)``.
    """
    reports = [float(r) for r in reports]
    breaks = rule.breakpoints(i, reports)

    def f(u: float) -> float:
        return rule(i, u, reports)

    order = sorted(range(len(values)), key=lambda j: values[j])
    top = max((float(v) for v in values), default=0.0)
    if top <= 0:
        return [(f(float(v)), 0.0) for v in values]
    knots = sorted({0.0, *(float(v) for v in values if v > 0),
                    *(p for p in breaks if 0.0 < p < top)})
    integ = _Integrator(f)
    cumulative = {0.0: 0.0}
    acc = 0.0
    for a, b in zip(knots, knots[1:]):
        acc += integ.smooth_piece(a, b, top)
        cumulative[b] = acc
    out: list[tuple[float, float] | None] = [None] * len(values)
    for j in order:
        u = float(values[j])
        xu = f(u)
        out[j] = (xu, u * xu - cumulative[u]) if u > 0 else (xu, 0.0)
    return out  # type: ignore[return-value]


def allocation_curve(rule: AllocationRule, i: int, reports: Sequence[float],
                     grid: Sequence[float]) -> list[tuple[float, float]]:
    reports = [float(r) for r in reports]
    return [(float(u), rule(i, float(u), reports)) for u in grid]
