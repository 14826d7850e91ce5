"""Budget-constrained auctions of one divisible good, scored by liquid welfare."""
from .clinching import ClinchingTrace, clinching_auction, clinching_epsilon_oracle
from .errors import *  # noqa: F401,F403
from .estimate_and_price import (GreedyLedger, PriceSchedule, demand, estimate_and_price,
                                 sell_without)
from .model import (INF, Additive, Bidder, Instance, Outcome, PiecewiseLinear, capped_value,
                    liquid_welfare, utility, validate)
from .myerson import AllocationRule, myerson_payment
from .oracle import OracleResult, optimal_lw, optimal_lw_additive, optimal_lw_grid, x_dagger
from .special import (MatchingMarket, capped_vcg_matching, capped_vickrey, random_dump,
                      two_bidder_43)
from .uniform_price import ClearingResult, uniform_price_allocation, uniform_price_auction

__version__ = "0.1.0"
