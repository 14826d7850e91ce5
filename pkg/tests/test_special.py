import itertools

import numpy as np
import pytest

from liquidwelfare.errors import InstanceError
from liquidwelfare.model import INF, Instance, liquid_welfare
from liquidwelfare.oracle import optimal_lw_additive
from liquidwelfare.special import (RULE_43, MatchingMarket, broken_first_price, capped_vcg_matching,
                                   capped_vickrey, per_unit_capped_vcg, random_dump, two_bidder_43)

from oracles import brute_matching, brute_matching_without, riemann_payment


def test_capped_vickrey_examples():
    o = capped_vickrey([5, 3], [4, 10])
    assert o.allocation.tolist() == [1, 0] and o.payments.tolist() == [3, 0]
    o = capped_vickrey([5, 3], [2, 10])
    assert o.allocation.tolist() == [0, 1] and o.payments.tolist() == [0, 2]
    o = capped_vickrey([7], [1])
    assert o.allocation.tolist() == [1] and o.payments.tolist() == [0]


def test_capped_vickrey_tie_to_lower_index():
    assert capped_vickrey([3, 5], [2, 2]).diagnostics["winner"] == 0


def test_matching_examples():
    o = capped_vcg_matching(MatchingMarket([[3, 1], [2, 2]], [10, 10]))
    assert o.diagnostics["assignment"] == [0, 1] and o.diagnostics["liquid_welfare"] == 5
    o = capped_vcg_matching(MatchingMarket([[3, 1], [2, 2]], [1, 10]))
    assert o.diagnostics["liquid_welfare"] == 3
    assert o.diagnostics["assignment"] == list(brute_matching([[1, 1], [2, 2]])[1])
    o = capped_vcg_matching(MatchingMarket([[4]], [2]))
    assert o.diagnostics["liquid_welfare"] == 2 and o.payments.tolist() == [0]


def test_matching_market_validation():
    with pytest.raises(InstanceError):
        MatchingMarket([[1, 2]], [1])
    with pytest.raises(InstanceError):
        MatchingMarket([[1, -2], [0, 0]], [1, 1])


@pytest.mark.parametrize("seed", range(25))
def test_matching_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    # coarse integer values make ties common
    v = rng.integers(0, 5, (n, n)).astype(float)
    b = rng.integers(1, 5, n).astype(float)
    market = MatchingMarket(v, b)
    o = capped_vcg_matching(market)
    best, perm = brute_matching(market.capped)
    assert o.diagnostics["liquid_welfare"] == pytest.approx(best)
    assert tuple(o.diagnostics["assignment"]) == perm
    for i in range(n):
        expected = brute_matching_without(market.capped, i) - (best - market.capped[i, perm[i]])
        assert o.payments[i] == pytest.approx(expected, abs=1e-9)
        assert o.payments[i] <= b[i] + 1e-9


def test_matching_not_truthful_under_budgeted_utility():
    # agent 0 values item 0 far above its budget; shading its whole row wins it
    v = np.array([[100.0, 0.9], [0.5, 0.0]])
    truth = capped_vcg_matching(MatchingMarket(v, [1, 10]))
    lie = capped_vcg_matching(MatchingMarket(v * [[0.125], [1]], [1, 10]))
    u_truth = v[0, truth.diagnostics["assignment"][0]] - truth.payments[0]
    u_lie = v[0, lie.diagnostics["assignment"][0]] - lie.payments[0]
    assert lie.payments[0] <= 1
    assert u_lie > u_truth + 90


@pytest.mark.parametrize("v, x", [((2, 0.5), (0.75, 0.25)), ((0.2, 0.1), (1, 0)), ((1.5, 1.5), (0.5, 0.5)),
                                  ((0.5, 2), (0.25, 0.75)), ((3, 1.2), (0.5, 0.5))])
def test_43_allocation(v, x):
    assert two_bidder_43(*v).allocation == pytest.approx(x)


def test_43_payments_against_riemann():
    for v in [(2, 0.5), (0.6, 0.45), (0.9, 3)]:
        o = two_bidder_43(*v)
        for i in range(2):
            def alloc(u, i=i):
                r = list(v)
                r[i] = u
                return RULE_43(i, u, r)
            assert o.payments[i] == pytest.approx(riemann_payment(alloc, v[i], 100_001), abs=1e-4)


def test_43_budget_rescaling():
    base = two_bidder_43(2, 0.5)
    scaled = two_bidder_43(6, 1.5, budget=3)
    assert scaled.allocation == pytest.approx(base.allocation)
    assert scaled.payments == pytest.approx(3 * base.payments)


def test_43_monotone_and_within_budget():
    grid = np.linspace(0.01, 4, 400)
    for other in (0.2, 1 / 3, 0.5, 0.9, 1.0, 2.0):
        xs = [RULE_43(0, u, [u, other]) for u in grid]
        assert all(b >= a - 1e-12 for a, b in zip(xs, xs[1:]))
        for u in (0.5, 1.0, 2.0, 4.0):
            assert two_bidder_43(u, other).payments[0] <= 1 + 1e-9


def test_43_crossing_equal_values():
    # own value passing the rival's 0.5: share goes 1/4 -> 1/2 -> 3/4
    assert [RULE_43(0, u, [u, 0.5]) for u in (0.49, 0.5, 0.51)] == pytest.approx([0.25, 0.5, 0.75], abs=0.02)


@pytest.mark.parametrize("alpha", [10, 100, 1000])
def test_43_lower_bound_family(alpha):
    inst = Instance.additive([1, alpha], [1, 1])
    o = two_bidder_43(1, alpha)
    r = optimal_lw_additive(inst).optimum / liquid_welfare(inst, o.allocation)
    assert r <= 4 / 3 + 1e-9
    assert r == pytest.approx(4 / 3, abs=0.01 + 1 / alpha)


def test_random_dump():
    inst = Instance.additive([1, 2, 3])
    o = random_dump(inst, 42)
    assert o.allocation.sum() == 1 and o.payments.sum() == 0
    assert random_dump(inst, 42).allocation.tolist() == o.allocation.tolist()
    assert random_dump(Instance.additive([5]), 7).allocation.tolist() == [1]


def test_random_dump_expected_welfare():
    inst = Instance.additive([1, 4, 10])
    seeds = 100_000
    rng_winners = np.bincount([random_dump(inst, s).diagnostics["winner"] for s in range(seeds)], minlength=3)
    expected = float(rng_winners @ inst.values) / seeds
    assert expected >= inst.values.sum() / 3 * 0.98


def test_per_unit_capped_vcg_fails_to_approximate():
    n = 10
    inst = Instance.additive([2] + [1000] * (n - 1), [2] + [1] * (n - 1))
    o = per_unit_capped_vcg(inst)
    assert o.allocation[0] == 1
    assert liquid_welfare(inst, o.allocation) == pytest.approx(2)
    assert optimal_lw_additive(inst).optimum >= n - 1


def test_broken_first_price_charges_bid():
    o = broken_first_price(Instance.additive([2, 3], [10, 10]))
    assert o.payments.tolist() == [0, 3]
