import math

import numpy as np
import pytest

from liquidwelfare.audit import random_concave, random_subadditive
from liquidwelfare.errors import TooFewBidders
from liquidwelfare.estimate_and_price import (DeviationOracle, PriceSchedule, demand,
                                              estimate_and_price, segment_count_for, sell_without)
from liquidwelfare.model import INF, Additive, Bidder, Instance, PiecewiseLinear, capped_value, liquid_welfare
from liquidwelfare.oracle import x_dagger

from oracles import greedy_profit_scan

WORKED = Instance((Bidder(Additive(10), 4), Bidder(Additive(2), 3)))


def test_schedule_shape():
    s = PriceSchedule(8, 4)
    assert s.length == 1 / 16
    assert s.prices.tolist() == [2 ** j / 2 for j in range(1, 9)]
    assert s.bounds[-1] == 0.5
    assert s.cost(0.5) == pytest.approx(sum(s.prices) / 16)
    for c in (0.0, 0.1, 3.0, s.cost(0.3)):
        assert s.cost(s.reach(c)) == pytest.approx(min(c, s.cost(0.5)))


def test_segment_count_uses_log2():
    assert [segment_count_for(n) for n in (2, 4, 8, 16)] == [8, 16, 24, 32]


# The next two use 1/32 segments (k = 16), the length at which the hand-worked
# figures were derived; with n = 2 the log rule gives k = 8 instead.
def test_demand_stops_at_price_equal_to_value():
    x, pay = demand(Additive(2), 3, PriceSchedule(16, 4), 0.0)
    assert (x, pay) == pytest.approx((1 / 32, 1 / 32))


def test_demand_buys_every_profitable_segment():
    x, pay = demand(Additive(10), 4, PriceSchedule(16, 1), 0.0)
    assert (x, pay) == pytest.approx((6 / 32, 15.75 / 32))


def test_demand_at_log_rule_segment_length():
    assert demand(Additive(2), 3, PriceSchedule(8, 4), 0.0) == pytest.approx((1 / 16, 1 / 16))
    assert demand(Additive(10), 4, PriceSchedule(8, 1), 0.0) == pytest.approx((6 / 16, 15.75 / 16))


def test_demand_zero_valuation():
    assert demand(Additive(0), 5, PriceSchedule(8, 1), 0.0) == (0.0, 0.0)


def test_demand_budget_binds_mid_segment():
    x, pay = demand(Additive(100), 0.3, PriceSchedule(8, 1), 0.0)
    assert pay == pytest.approx(0.3)
    assert 0 < x < 0.5


@pytest.mark.parametrize("seed", range(25))
def test_demand_beats_dense_scan(seed):
    rng = np.random.default_rng(seed)
    inst = random_concave(rng, 1) if seed % 2 else random_subadditive(rng, 1)
    b = inst.bidders[0]
    k = int(rng.integers(2, 12))
    sched = PriceSchedule(k, float(rng.uniform(0.05, 3)))
    start = float(rng.uniform(0, 0.45))
    budget = float(rng.uniform(0.01, 2))
    x, pay = demand(b.valuation, budget, sched, start)
    best, _ = greedy_profit_scan(b.valuation, budget, sched.prices, sched.length, start)
    assert pay <= budget + 1e-12
    assert b.valuation(x) - pay >= best - 1e-12
    assert 0 <= x <= 0.5 - start + 1e-15


def test_sell_without_worked_instance():
    led = sell_without(WORKED, 0, segment_count=16)
    assert [(e.bidder, e.quantity, e.payment) for e in led.entries] == [(1, pytest.approx(1 / 32), pytest.approx(1 / 32))]
    led = sell_without(WORKED, 1, segment_count=16)
    e = led.entries[0]
    assert (e.bidder, e.quantity, e.payment) == (0, pytest.approx(6 / 32), pytest.approx(15.75 / 32))


def test_sell_without_single_bidder_is_empty():
    assert sell_without(Instance.additive([3]), 0).entries == []


def test_worked_instance_outcome_with_32nd_segments():
    out = estimate_and_price(WORKED, segment_count=16)
    d = out.diagnostics
    assert (d["pivot"], d["runner_up"], d["choice"]) == (0, 1, "half")
    assert out.allocation == pytest.approx([0.5, 1 / 32])
    assert out.payments == pytest.approx([2, 1 / 32])
    assert liquid_welfare(WORKED, out.allocation) == pytest.approx(4.0625)


def test_worked_instance_outcome_default_segments():
    out = estimate_and_price(WORKED)
    assert out.allocation == pytest.approx([0.5, 1 / 16])
    assert liquid_welfare(WORKED, out.allocation) == pytest.approx(4.125)


def test_symmetric_bidders():
    inst = Instance.additive([1, 1])
    out = estimate_and_price(inst)
    d = out.diagnostics
    assert (d["pivot"], d["runner_up"]) == (0, 1)
    # both exclusions see anchor 1/2: prices 1/8, 1/4, 1/2, then 1 (not strictly profitable)
    assert out.allocation == pytest.approx([3 / 16, 3 / 16])
    assert out.payments == pytest.approx([0.875 / 16] * 2)


def test_zero_instance_and_too_few():
    out = estimate_and_price(Instance.additive([0, 0, 0]))
    assert out.allocation.tolist() == [0, 0, 0] and out.payments.tolist() == [0, 0, 0]
    with pytest.raises(TooFewBidders):
        estimate_and_price(Instance.additive([1]))


def test_pivot_guard():
    # literal rule would charge 1.8 to a pivot with budget 1
    inst = Instance((Bidder(Additive(20), 1.0), Bidder(Additive(1.8), INF)))
    out = estimate_and_price(inst)
    assert out.diagnostics["choice"] == "bundle-guard"
    assert out.payments[0] <= 1.0


@pytest.mark.parametrize("seed", range(15))
def test_deviation_oracle_matches_full_run(seed):
    rng = np.random.default_rng(seed)
    inst = random_concave(rng, int(rng.integers(2, 6)))
    oracle = DeviationOracle(inst)
    for i in range(inst.n):
        b = inst.bidders[i]
        for f, g in [(1, 1), (0.3, 1), (4, 1), (1, 0.2), (2.5, 6)]:
            dev = Bidder(b.valuation.scaled(f), b.budget * g)
            full = estimate_and_price(inst.with_bidder(i, dev))
            x, p = oracle.outcome(i, dev)
            assert x == pytest.approx(full.allocation[i], abs=1e-12)
            assert p == pytest.approx(full.payments[i], abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_cheapest_unsold_price_bound(seed):
    rng = np.random.default_rng(1000 + seed)
    inst = random_concave(rng, int(rng.integers(2, 6)))
    out = estimate_and_price(inst)
    r1 = out.diagnostics["pivot"]
    led = out.diagnostics["ledger_without_pivot"]
    sold = sum(e["quantity"] for e in led["entries"])
    sched = PriceSchedule(led["schedule"]["k"], led["schedule"]["anchor"])
    p_bar = sched.price_at(sold)
    xd = x_dagger(inst, r1, resolution=400).allocation
    for i, b in enumerate(inst.bidders):
        if i == r1:
            continue
        lhs = capped_value(b.valuation, b.budget, out.allocation[i])
        for xp in (xd[i], float(rng.uniform(0, 1))):
            assert lhs >= capped_value(b.valuation, b.budget, xp) - p_bar * xp - 1e-9


@pytest.mark.parametrize("seed", range(30))
def test_half_plus_dagger_covers_half_optimum(seed):
    from liquidwelfare.oracle import optimal_lw_grid
    rng = np.random.default_rng(2000 + seed)
    inst = random_concave(rng, int(rng.integers(2, 5)))
    caps = [capped_value(b.valuation, b.budget, 0.5) for b in inst.bidders]
    r1 = int(np.argmax(caps))
    opt = optimal_lw_grid(inst, 400).optimum
    assert caps[r1] + x_dagger(inst, r1, resolution=400).optimum >= 0.5 * opt - 1e-9
