import numpy as np
import pytest

from liquidwelfare.errors import NotAdditive, ResolutionTooSmall
from liquidwelfare.model import INF, Additive, Bidder, Instance, PiecewiseLinear, liquid_welfare
from liquidwelfare.oracle import optimal_lw, optimal_lw_additive, optimal_lw_grid, x_dagger

from oracles import brute_lw_grid


def test_greedy_examples():
    res = optimal_lw_additive(Instance.additive([2, 3], [1, 1]))
    assert res.allocation == pytest.approx([1 / 2, 1 / 3])
    assert res.optimum == pytest.approx(2.0)
    assert optimal_lw_additive(Instance.additive([1.5, 1, 2], [1, 0.25, 1])).allocation[0] == pytest.approx(0.5)
    assert optimal_lw_additive(Instance.additive([3, 1, 2], [1, 0.25, 1])).allocation[0] == pytest.approx(1 / 3)


def test_greedy_rejects_pl():
    with pytest.raises(NotAdditive):
        optimal_lw_additive(Instance((Bidder(PiecewiseLinear(((0, 0), (1, 1)))),)))


def test_grid_examples():
    assert optimal_lw_grid(Instance.additive([2, 3], [1, 1]), 1000).optimum == pytest.approx(2.0, abs=0.003)
    assert optimal_lw_grid(Instance.additive([5], [INF]), 10).optimum == pytest.approx(5.0)
    inst = Instance((Bidder(Additive(10), 4), Bidder(Additive(2), 3)))
    assert optimal_lw_grid(inst, 1000).optimum == pytest.approx(5.2, abs=0.01)


def test_grid_resolution_too_small():
    with pytest.raises(ResolutionTooSmall):
        optimal_lw_grid(Instance.additive([1, 2, 3]), 2)


@pytest.mark.parametrize("seed", range(8))
def test_grid_dp_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    bidders = []
    for _ in range(3):
        qs = np.sort(rng.uniform(0.05, 0.95, 2))
        vs = np.cumsum(rng.uniform(0, 3, 3))
        pts = ((0.0, 0.0), (qs[0], vs[0]), (qs[1], vs[1]), (1.0, vs[2]))
        bidders.append(Bidder(PiecewiseLinear(pts), float(rng.uniform(0.5, 4))))
    inst = Instance(tuple(bidders))
    m = 9
    res = optimal_lw_grid(inst, m)
    assert res.optimum == pytest.approx(brute_lw_grid(inst, m), abs=1e-12)
    assert liquid_welfare(inst, res.allocation) == pytest.approx(res.optimum)


def test_x_dagger_examples():
    inst = Instance((Bidder(Additive(10), 4), Bidder(Additive(2), 3)))
    r = x_dagger(inst, excluded=0)
    assert r.optimum == pytest.approx(1.0)
    assert r.allocation == pytest.approx([0, 0.5])
    r = x_dagger(inst, excluded=1)
    assert r.optimum == pytest.approx(4.0)
    assert r.allocation == pytest.approx([0.5, 0])
    assert x_dagger(Instance.additive([3], [1]), excluded=0).optimum == 0.0


def test_x_dagger_cap_per_player():
    inst = Instance.additive([10, 10, 10])
    r = x_dagger(inst, excluded=0, cap_per_player=0.1)
    assert r.allocation.max() <= 0.1 + 1e-12
    assert r.optimum == pytest.approx(2.0)


def test_x_dagger_allocates_half_exactly():
    inst = Instance.additive([5, 1, 2], [0.2, INF, 0.3])
    r = x_dagger(inst, excluded=0)
    assert r.allocation.sum() == pytest.approx(0.5)
    assert r.allocation[0] == 0


def test_optimal_lw_dispatch():
    assert optimal_lw(Instance.additive([1, 2])).method == "greedy"
    assert optimal_lw(Instance((Bidder(PiecewiseLinear(((0, 0), (1, 1)))),)), 10).method == "grid-dp"
