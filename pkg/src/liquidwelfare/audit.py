"""Executable checks of truthfulness, feasibility, structure and approximation.

A "pass" from a grid search means no violation was found at that grid's
resolution, nothing more.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .clinching import clinching_auction
from .errors import LiquidWelfareError
from .estimate_and_price import rank_pivots
from .mechanisms import Mechanism, Misreport
from .model import (AUDIT_TOL, INF, Additive, Bidder, Instance, Outcome, PiecewiseLinear,
                    capped_value, liquid_welfare, normalized)
from .oracle import optimal_lw
from .uniform_price import uniform_price_auction

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
UTILITY_SLACK = 1e-9

DEFAULT_FACTORS = np.geomspace(1 / 8, 8, 41)
JOINT_FACTORS = np.geomspace(1 / 8, 8, 11)


@dataclass
class AuditReport:
    check: str
    verdict: str
    witness: dict[str, Any] | None = None
    measured: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self):
        from .io import problem_to_dict  # local import: io depends on this module's types
        w = None
        if self.witness is not None:
            w = {k: (problem_to_dict(v) if isinstance(v, Instance) or hasattr(v, "capped") else _plain(v))
                 for k, v in self.witness.items()}
        return {"check": self.check, "verdict": self.verdict, "witness": w,
                "measured": {k: _plain(v) for k, v in self.measured.items()}}


def _plain(v):
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return "inf" if f == INF else ("-inf" if f == -INF else f)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _misreports(mech: Mechanism, problem, i: int, factors) -> list[Misreport]:
    reps = [(float(f), 1.0) for f in factors]
    if mech.private_budgets:
        reps += [(1.0, float(g)) for g in factors]
        reps += [(float(f), float(g)) for f in JOINT_FACTORS for g in JOINT_FACTORS]
        reps += _rank_crossing(problem, i)
    return reps


def _rank_crossing(problem: Instance, i: int) -> list[Misreport]:
    """Misreports that move bidder i across the pivot boundaries.

    A non-pivot is pushed just above the pivot's capped half value, the
    pivot just below the runner-up's; both sides of each tie are probed.
    """
    inst = normalized(problem)
    if inst.n < 2:
        return []
    caps = [capped_value(b.valuation, b.budget, 0.5) for b in inst.bidders]
    r1, r2 = rank_pivots(caps)
    b = inst.bidders[i]
    v_half = b.valuation(0.5)
    out: list[Misreport] = []
    targets = [caps[r1]] if i != r1 else [caps[r2]]
    if i == r1 and inst.n > 2:
        others = sorted((c for j, c in enumerate(caps) if j != r1), reverse=True)
        targets.append(others[1])
    for t in targets:
        for eps in (-1e-6, -1e-12, 0.0, 1e-12, 1e-6):
            want = t * (1 + eps)
            if want <= 0 or v_half <= 0:
                continue
            f = want / v_half
            g = want / b.budget if b.budget not in (0.0, INF) else 1.0
            out.append((f, max(g, 1.0)))  # raise the value, budget only if it binds
            if b.budget not in (0.0, INF):
                out.append((max(f, 1.0), g))  # or lower the budget
    return out


def check_truthfulness(mech: Mechanism, problem, factors: Sequence[float] | None = None,
                       tol: float = AUDIT_TOL) -> AuditReport:
    """No bidder gains more than ``tol`` from any grid misreport.

    Utility is measured with the true valuation and the true budget, so a
    misreport that ends up paying above the true budget scores ``-inf``.
    """
    factors = DEFAULT_FACTORS if factors is None else np.asarray(factors, dtype=float)
    n = problem.n
    try:
        truth = mech.run(problem)
    except LiquidWelfareError as exc:
        return AuditReport("truthfulness", INCONCLUSIVE, {"problem": problem, "error": str(exc)})
    worst = -INF
    tried = 0
    for i in range(n):
        budget = mech.budget_of(problem, i)
        x_i = truth.allocation[i]
        u0 = _budgeted(mech.value_of(problem, i, x_i), float(truth.payments[i]), budget)
        reps = _misreports(mech, problem, i, factors)
        try:
            outs = mech.outcomes_for(problem, i, reps)
        except LiquidWelfareError as exc:
            return AuditReport("truthfulness", INCONCLUSIVE,
                               {"problem": problem, "bidder": i, "error": str(exc)})
        tried += len(reps)
        for (f, g), (x, pay) in zip(reps, outs):
            u = _budgeted(mech.value_of(problem, i, x), pay, budget)
            gain = u - u0
            if gain > worst:
                worst = gain
            if gain > tol:
                return AuditReport("truthfulness", FAIL,
                                   {"problem": problem, "mechanism": mech.name, "bidder": i,
                                    "value_factor": f, "budget_factor": g,
                                    "truthful_utility": u0, "deviation_utility": u},
                                   {"gain": gain, "deviations": tried})
    return AuditReport("truthfulness", PASS, None, {"max_gain": worst, "deviations": tried})


def _budgeted(value: float, pay: float, budget: float) -> float:
    return -INF if pay > budget + UTILITY_SLACK else value - pay


def check_budget_feasibility(outcome: Outcome, budgets: Sequence[float] | Instance,
                             tol: float = AUDIT_TOL) -> AuditReport:
    b = budgets.budgets if isinstance(budgets, Instance) else np.asarray(budgets, dtype=float)
    over = np.asarray(outcome.payments) - b
    worst = float(over.max()) if over.size else -INF
    if worst > tol:
        i = int(np.argmax(over))
        return AuditReport("budget_feasibility", FAIL,
                           {"bidder": i, "payment": float(outcome.payments[i]), "budget": float(b[i])},
                           {"max_excess": worst})
    return AuditReport("budget_feasibility", PASS, None, {"max_excess": worst})


AllocationFn = Callable[[Instance], Sequence[float]]


def check_monotonicity(mechanism: Mechanism | AllocationFn, instance: Instance, bidder: int,
                       grid: Sequence[float], tol: float = 1e-9) -> AuditReport:
    """Bidder's allocation is non-decreasing as its (additive) value runs over ``grid``."""
    run = mechanism.run if isinstance(mechanism, Mechanism) else mechanism
    inst = normalized(instance)
    b = inst.bidders[bidder]
    xs = []
    for u in grid:
        alloc = run(inst.with_bidder(bidder, Bidder(Additive(float(u)), b.budget)))
        alloc = alloc.allocation if isinstance(alloc, Outcome) else np.asarray(alloc)
        xs.append(float(alloc[bidder]))
    for j in range(1, len(xs)):
        if xs[j] < xs[j - 1] - tol:
            return AuditReport("monotonicity", FAIL,
                               {"bidder": bidder, "u_low": float(grid[j - 1]), "u_high": float(grid[j]),
                                "x_low": xs[j - 1], "x_high": xs[j]},
                               {"drop": xs[j - 1] - xs[j]})
    return AuditReport("monotonicity", PASS, None, {"points": len(xs)})


def check_pareto_structure(outcome: Outcome, instance: Instance, p_f: float | None = None,
                           tol: float = AUDIT_TOL) -> AuditReport:
    """Structure of a clinching outcome.

    If the runner-up value is below the top bidder's budget the top bidder
    holds everything. Otherwise with final price ``p_f = v_k``: positive
    quantity only for ``v_j >= v_k``, and every ``v_j > v_k`` spends its budget.

    The budget bullet is checked as stated even though it can fail on true
    clinching outcomes: when exactly one bidder remains above ``p_f`` it
    clinches the leftover supply at ``p_f`` and may keep part of its budget.
    """
    inst = normalized(instance)
    v, B = inst.values, inst.budgets
    x, pay = outcome.allocation, outcome.payments
    total = float(x.sum())
    measured = {"total_allocation": total}
    if inst.n and v.max() > 0 and abs(total - 1.0) > tol:
        return AuditReport("pareto_structure", FAIL, {"reason": "allocation does not sum to 1"}, measured)
    order = sorted(range(inst.n), key=lambda i: (-v[i], i))
    if inst.n == 1 or v[order[1]] < B[order[0]]:
        top = order[0]
        measured["case"] = "single-winner"
        if abs(x[top] - 1.0) > tol:
            return AuditReport("pareto_structure", FAIL,
                               {"reason": "top bidder does not hold the whole good", "bidder": top}, measured)
        return AuditReport("pareto_structure", PASS, None, measured)
    if p_f is None:
        p_f = outcome.diagnostics.get("clinching_interval", (None, None))[1]
    if p_f is None:
        p_f = clinching_auction(inst)[1].interval[1]
    measured.update(case="final-price", p_f=float(p_f))
    if not any(abs(vi - p_f) <= tol * max(1.0, p_f) for vi in v):
        return AuditReport("pareto_structure", FAIL, {"reason": "p_f is not a bidder's value"}, measured)
    above = int(np.sum(v > p_f + tol))
    measured["bidders_above_p_f"] = above
    for j in range(inst.n):
        if x[j] > tol and v[j] < p_f - tol:
            return AuditReport("pareto_structure", FAIL,
                               {"reason": "winner below final price", "bidder": j}, measured)
        if v[j] > p_f + tol and abs(pay[j] - B[j]) > tol:
            return AuditReport("pareto_structure", FAIL,
                               {"reason": "high bidder did not exhaust budget", "bidder": j,
                                "payment": float(pay[j]), "budget": float(B[j]),
                                "bidders_above_p_f": above}, measured)
    return AuditReport("pareto_structure", PASS, None, measured)


def ratio(optimum: float, achieved: float) -> float:
    if optimum <= 0:
        return 1.0
    if achieved <= 0:
        return INF
    return optimum / achieved


def measure_ratio(mech: Mechanism, problem, optimum: float | None = None, outcome: Outcome | None = None,
                  resolution: int = 1000, tol: float = AUDIT_TOL) -> AuditReport:
    outcome = outcome if outcome is not None else mech.run(problem)
    opt = mech.optimum(problem, resolution) if optimum is None else optimum
    lw = mech.liquid_welfare(problem, outcome)
    r = ratio(opt, lw)
    measured = {"ratio": r, "lw": lw, "lw_opt": opt}
    if mech.ratio_bound is None:
        return AuditReport("ratio", INCONCLUSIVE, None, measured)
    bound = mech.ratio_bound(problem.n)
    measured["bound"] = bound
    if r > bound + tol:
        return AuditReport("ratio", FAIL, {"problem": problem, "mechanism": mech.name}, measured)
    return AuditReport("ratio", PASS, None, measured)


def check_dominance(instance: Instance, tol: float = AUDIT_TOL) -> AuditReport:
    inst = normalized(instance)
    lw_c = liquid_welfare(inst, clinching_auction(inst)[0].allocation)
    lw_u = liquid_welfare(inst, uniform_price_auction(inst).allocation)
    measured = {"lw_uniform": lw_u, "lw_clinching": lw_c, "gap": lw_u - lw_c}
    if lw_u < lw_c - tol:
        return AuditReport("dominance", FAIL, {"problem": instance}, measured)
    return AuditReport("dominance", PASS, None, measured)


def check_revenue(outcome: Outcome, instance: Instance, optimum: float | None = None,
                  tol: float = AUDIT_TOL) -> AuditReport:
    """With two or more winners, clinching revenue is at least half the optimum."""
    winners = int(np.sum(outcome.allocation > tol))
    if winners < 2:
        return AuditReport("revenue", INCONCLUSIVE, None, {"winners": winners})
    opt = optimal_lw(instance).optimum if optimum is None else optimum
    rev = outcome.revenue
    measured = {"revenue": rev, "lw_opt": opt, "winners": winners}
    if rev < 0.5 * opt - tol:
        return AuditReport("revenue", FAIL, {"problem": instance}, measured)
    return AuditReport("revenue", PASS, None, measured)


# ---- random instances ----

def _log_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _budgets(rng: np.random.Generator, n: int) -> np.ndarray:
    b = _log_uniform(rng, 0.1, 10.0, n)
    b[rng.random(n) < 0.1] = INF
    return b


def random_additive(rng: np.random.Generator, n: int) -> Instance:
    return Instance.additive(_log_uniform(rng, 0.1, 10.0, n), _budgets(rng, n))


def random_concave(rng: np.random.Generator, n: int, pieces: int = 4) -> Instance:
    """Piecewise-linear valuations with sorted (non-increasing) random slopes."""
    bidders = []
    for b in _budgets(rng, n):
        cuts = np.sort(rng.uniform(0, 1, pieces - 1))
        qs = np.concatenate(([0.0], cuts, [1.0]))
        slopes = np.sort(_log_uniform(rng, 0.1, 10.0, pieces))[::-1]
        vs = np.concatenate(([0.0], np.cumsum(slopes * np.diff(qs))))
        bidders.append(Bidder(PiecewiseLinear(tuple(zip(qs, vs)), concave=True), float(b)))
    return Instance(tuple(bidders))


def is_subadditive(val, points: int = 64, tol: float = 1e-9) -> bool:
    q = np.arange(points + 1) / points
    vq = val.evaluate(q)
    for a in range(1, points + 1):
        for c in range(1, points + 1 - a):
            if vq[a + c] > vq[a] + vq[c] + tol * max(1.0, vq[a + c]):
                return False
    return True


def random_subadditive(rng: np.random.Generator, n: int, pieces: int = 4) -> Instance:
    """Star-shaped, non-concave piecewise-linear valuations.

    ``v(q)/q`` is non-increasing, which implies subadditivity; values are
    built as ``max(v_prev, r_j q_j)`` with falling ratios so that flat steps
    alternate with steep ones.
    """
    bidders = []
    for b in _budgets(rng, n):
        for _ in range(100):
            cuts = np.sort(rng.uniform(0.05, 1, pieces - 1))
            qs = np.concatenate(([0.0], cuts, [1.0]))
            ratios = np.sort(_log_uniform(rng, 0.1, 10.0, pieces))[::-1]
            vs = [0.0]
            for q, r in zip(qs[1:], ratios):
                vs.append(max(vs[-1], r * q))
            val = PiecewiseLinear(tuple(zip(qs, vs)))
            if is_subadditive(val):
                break
        bidders.append(Bidder(val, float(b)))
    return Instance(tuple(bidders))


GENERATORS = {"additive": random_additive, "concave": random_concave, "subadditive": random_subadditive}


def random_problem(mech: Mechanism, rng: np.random.Generator, n: int, generator: str | None = None):
    """A random input suited to ``mech``."""
    from .special import MatchingMarket

    if mech.problem_kind == "matching":
        return MatchingMarket(_log_uniform(rng, 0.1, 10.0, (n, n)), _budgets(rng, n))
    if mech.name == "two-bidder-43":
        b = float(_log_uniform(rng, 0.1, 10.0))
        return Instance.additive(_log_uniform(rng, 0.05, 5.0, 2) * b, [b, b])
    if generator is None:
        generator = "concave" if mech.name == "estimate-and-price" else "additive"
    return GENERATORS[generator](rng, n)


def audit_suite(mech: Mechanism, problem, factors: Sequence[float] | None = None,
                resolution: int = 1000) -> list[AuditReport]:
    """Every check that applies to ``mech`` on one input."""
    reports = [check_truthfulness(mech, problem, factors)]
    try:
        outcome = mech.run(problem)
    except LiquidWelfareError as exc:
        return reports + [AuditReport("run", INCONCLUSIVE, {"problem": problem, "error": str(exc)})]
    budgets = problem.budgets if hasattr(problem, "capped") else normalized(problem).budgets
    reports.append(check_budget_feasibility(outcome, budgets))
    opt = mech.optimum(problem, resolution)
    reports.append(measure_ratio(mech, problem, opt, outcome))
    if mech.name == "clinching":
        reports.append(check_pareto_structure(outcome, problem))
        reports.append(check_revenue(outcome, problem, opt))
    if mech.name in ("clinching", "uniform"):
        reports.append(check_dominance(problem))
    for r in reports:
        if r.verdict == FAIL and r.witness is not None:
            r.witness.setdefault("problem", problem)
            r.witness.setdefault("mechanism", mech.name)
    return reports
