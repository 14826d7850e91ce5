"""Optimal liquid welfare: exact greedy for additive bidders, grid DP otherwise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotAdditive, ResolutionTooSmall
from .model import Instance, capped_value, liquid_welfare, normalized


@dataclass
class OracleResult:
    optimum: float
    allocation: np.ndarray
    method: str

    def to_dict(self):
        return {"optimum": self.optimum, "allocation": self.allocation.tolist(), "method": self.method}


def optimal_lw_additive(instance: Instance) -> OracleResult:
    """Fill bidders in descending value order, each up to ``B_i / v_i``.

    Ties in value go to the lower index.
    """
    instance = normalized(instance)
    if not instance.is_additive:
        raise NotAdditive("greedy oracle needs additive valuations")
    values, budgets = instance.values, instance.budgets
    order = sorted(range(instance.n), key=lambda i: (-values[i], i))
    x = np.zeros(instance.n)
    left = 1.0
    for i in order:
        if left <= 0:
            break
        cap = budgets[i] / values[i] if values[i] > 0 else math.inf
        x[i] = min(cap, left)
        left -= x[i]
    return OracleResult(liquid_welfare(instance, x), x, "greedy")


def _capped_on_grid(instance: Instance, m: int) -> np.ndarray:
    grid = np.arange(m + 1) / m
    return np.array([np.minimum(b.valuation.evaluate(grid), b.budget) for b in instance.bidders])


def _grid_dp(table: np.ndarray, total: int, caps: list[int]) -> tuple[float, np.ndarray]:
    """Maximise sum_i table[i, a_i] s.t. sum a_i <= total, a_i <= caps[i].

    Returns the optimum and the integer allocation (in grid units).
    """
    n = table.shape[0]
    best = np.full(total + 1, -np.inf)
    best[0] = 0.0
    choices = np.zeros((n, total + 1), dtype=np.int64)
    for i in range(n):
        new = np.full(total + 1, -np.inf)
        choice = np.zeros(total + 1, dtype=np.int64)
        for a in range(min(caps[i], total) + 1):
            cand = best[: total + 1 - a] + table[i, a]
            tail = new[a:]
            better = cand > tail
            tail[better] = cand[better]
            choice[a:][better] = a
        best = new
        choices[i] = choice
    j = int(np.argmax(best))
    opt = float(best[j])
    units = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        units[i] = choices[i, j]
        j -= units[i]
    return opt, units


def optimal_lw_grid(instance: Instance, resolution: int = 1000) -> OracleResult:
    """Exact optimum over allocations on the grid ``{0, 1/m, ..., 1}``.

    Rounding loses at most a grid step of value per bidder, so the result
    trails the true optimum by O(max slope / m) per bidder.
    """
    instance = normalized(instance)
    m = int(resolution)
    if m < instance.n:
        raise ResolutionTooSmall(f"resolution {m} is below the number of bidders {instance.n}")
    table = _capped_on_grid(instance, m)
    _, units = _grid_dp(table, m, [m] * instance.n)
    x = units / m
    return OracleResult(liquid_welfare(instance, x), x, "grid-dp")


def x_dagger(instance: Instance, excluded: int, cap_per_player: float | None = None,
             resolution: int = 1000) -> OracleResult:
    """Best liquid welfare from half the good with ``excluded`` receiving nothing.

    With ``cap_per_player`` each remaining bidder receives at most that much.
    Valuations are monotone, so maximising over ``sum <= 1/2`` gives the same
    optimum as ``sum == 1/2``; the returned allocation is topped up to exactly
    one half whenever the caps allow it.
    """
    instance = normalized(instance)
    m = int(resolution)
    if m < instance.n:
        raise ResolutionTooSmall(f"resolution {m} is below the number of bidders {instance.n}")
    m += m % 2
    half = m // 2
    cap_units = half if cap_per_player is None else int(math.floor(cap_per_player * m + 1e-9))
    caps = [0 if i == excluded else min(cap_units, half) for i in range(instance.n)]
    table = _capped_on_grid(instance, m)
    opt, units = _grid_dp(table, half, caps)
    short = half - int(units.sum())
    for i in range(instance.n):
        if short <= 0:
            break
        room = caps[i] - units[i]
        if room > 0:
            add = min(room, short)
            units[i] += add
            short -= add
    x = units / m
    return OracleResult(liquid_welfare(instance, x), x, "grid-dp")


def optimal_lw(instance: Instance, resolution: int = 1000) -> OracleResult:
    """Greedy when every bidder is additive, grid DP otherwise."""
    instance = normalized(instance)
    if instance.is_additive:
        return optimal_lw_additive(instance)
    return optimal_lw_grid(instance, resolution)


def capped_half_values(instance: Instance) -> list[float]:
    return [capped_value(b.valuation, b.budget, 0.5) for b in instance.bidders]
