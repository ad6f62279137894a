"""Equilibrium bidding, competition factors and simulation for CPA-constrained auctions."""

from .auction import FIRST_PRICE, SECOND_PRICE, BidStrategy, PaymentRule
from .competition import (competition_factor, gamma_monte_carlo, gamma_order_stat,
                          gamma_power_closed_form, gamma_sweep)
from .distributions import (DerivedPriceToBeat, Exponential, LogNormal, PointMass, Power, Uniform,
                            expected_max)
from .errors import (CFLError, ConfigError, CpaAuctionError, DegenerateEstimateError,
                     NumericalError, SolverError, UnsupportedCaseError)
from .hjb import HjbConfig, deterministic_plan, rates, simulate_trajectory, solve
from .simulator import BidderSpec, MarketConfig, deviation_scan, run, symmetric_market
from .strategy import CpaProblem, best_reply, reserve_sweep, symmetric_equilibrium

__version__ = "0.1.0"
