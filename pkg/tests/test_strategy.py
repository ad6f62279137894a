import math
import warnings

import numpy as np
import pytest

from cpa_auctions.auction import BidStrategy, PaymentRule
from cpa_auctions.distributions import (DerivedPriceToBeat, Exponential, LogNormal, PointMass, Power,
                                        Uniform)
from cpa_auctions.errors import ConfigError, UnsupportedCaseError
from conftest import random_cpa_problem
from cpa_auctions.strategy import (CpaProblem, ZeroWinProbability, best_reply, cpa_of_multiplier,
                                   equilibrium_problem, expected_seller_revenue_at_equilibrium,
                                   first_price_standard_bid, reserve_sweep,
                                   standard_equilibrium_slope, symmetric_equilibrium, value_and_cost)


def test_point_value_against_uniform_price():
    # v = 1/2, b- ~ U(0,1): winning at alpha v costs alpha v / 2 per unit value
    prob = CpaProblem(PointMass(0.5), Uniform(0, 1), 1.0)
    assert cpa_of_multiplier(prob, 1.0) == pytest.approx(0.5)
    assert cpa_of_multiplier(prob, 2.0) == pytest.approx(1.0)
    res = best_reply(prob)
    assert res.alpha_star == pytest.approx(2.0, rel=1e-8)
    assert res.binding
    assert res.lagrange_lambda == pytest.approx(1.0, rel=1e-6)


def test_slack_constraint_returns_cap():
    prob = CpaProblem(Uniform(0, 1), PointMass(0.0), 0.4)
    res = best_reply(prob, alpha_cap=0.8)
    assert not res.binding
    assert res.alpha_star == 0.8
    assert res.lagrange_lambda == 0.0


def test_value_and_cost_uniform_closed_form():
    # v ~ U(0,1), b- ~ U(0,1), alpha < 1: value alpha/3, cost alpha^2/6
    prob = CpaProblem(Uniform(0, 1), Uniform(0, 1), 1.0)
    value, cost = value_and_cost(prob, 0.6)
    assert value == pytest.approx(0.2, rel=1e-10)
    assert cost == pytest.approx(0.06, rel=1e-10)


def test_zero_win_warns():
    prob = CpaProblem(Uniform(2, 3), PointMass(6.0), 1.0)
    with pytest.warns(ZeroWinProbability):
        assert cpa_of_multiplier(prob, 1.0) == 0.0


def test_best_reply_is_feasible_and_maximal():
    prob = CpaProblem(Exponential(1.0), DerivedPriceToBeat(Exponential(1.0), 2, 1.5), 0.7)
    res = best_reply(prob)
    assert res.achieved_cpa <= 0.7 + 1e-6
    assert cpa_of_multiplier(prob, res.alpha_star * 1.01) > 0.7


@pytest.mark.parametrize("dist,n,T", [(Uniform(0, 1), 2, 0.4), (Power(2.0), 4, 0.9),
                                      (Exponential(1.0), 3, 1.0), (LogNormal(0, 0.5), 2, 0.6)])
def test_symmetric_equilibrium_is_a_fixed_point(dist, n, T):
    eq = symmetric_equilibrium(dist, n, T)
    res = best_reply(equilibrium_problem(dist, n, T, eq))
    assert res.alpha_star == pytest.approx(eq.slope, rel=1e-5)


def test_equilibrium_slopes():
    U = Uniform(0, 1)
    assert symmetric_equilibrium(U, 2, 0.4).slope == pytest.approx(0.8)
    assert symmetric_equilibrium(U, 2, 0.4, PaymentRule(0.5)).slope == pytest.approx(0.4 / 0.75)
    assert symmetric_equilibrium(U, 2, 0.4, PaymentRule(0.0)).slope == pytest.approx(0.4)
    # exponential gamma for n = 2 is 1/3
    assert symmetric_equilibrium(Exponential(1.0), 2, 1.0).slope == pytest.approx(3.0)


def test_equilibrium_rejects_unsupported():
    with pytest.raises(UnsupportedCaseError):
        symmetric_equilibrium(Uniform(0, 1), 2, 0.4, PaymentRule(1.0, 0.1))
    with pytest.raises(UnsupportedCaseError):
        standard_equilibrium_slope(Exponential(1.0), 2, 0.5)
    with pytest.raises(ConfigError):
        symmetric_equilibrium(Uniform(0, 1), 1, 0.4)


def test_first_price_bid_matches_power_slope():
    # for Power(a) with n bidders the first-price bid is linear with slope gamma-based ratio
    d, n = Power(2.0), 3
    slope = standard_equilibrium_slope(d, n, 0.0)
    for v in (0.2, 0.5, 0.9):
        assert first_price_standard_bid(d, n, v) == pytest.approx(slope * v, rel=1e-8)


def test_expected_revenue():
    assert expected_seller_revenue_at_equilibrium(Uniform(0, 1), 2, 0.4) == pytest.approx(4 / 15)
    assert expected_seller_revenue_at_equilibrium(Uniform(0, 1), 2, 0.0) == 0.0


def test_cpa_monotone_in_multiplier_random_problems():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        prob = random_cpa_problem(rng)
        alphas = np.sort(rng.uniform(0.05, 5.0, size=5))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroWinProbability)
            cpas = [cpa_of_multiplier(prob, a) for a in alphas]
        assert all(c2 >= c1 - 1e-9 * max(1.0, c1) for c1, c2 in zip(cpas, cpas[1:])), (prob, cpas)


def _reserve_oracle(m, r):
    # two U(0,1) bidders bidding m v, second price, reserve r
    th = min(r / m, 1.0)
    value = (1 - th ** 3) / 3
    cost = m * (th ** 2 * (1 - th) / 2 + (1 - th ** 3) / 6)
    return value, cost


def test_reserve_sweep_matches_analytic_grid():
    grid, eq = reserve_sweep(Uniform(0, 1), 2, 0.4, [0.0, 0.2], [0.6, 0.9], auctions=400_000, seed=3)
    for row in grid:
        value, cost = _reserve_oracle(row["multiplier"], row["reserve"])
        assert abs(row["value"] - value) <= 4 * row["value_std_error"]
        assert abs(row["payment"] - cost) <= 4 * row["payment_std_error"]
    assert [e["flag"] for e in eq] == ["", ""]


def test_reserve_sweep_flags_unbracketed():
    _, eq = reserve_sweep(Uniform(0, 1), 2, 0.4, [0.0], [0.2, 0.3], auctions=20_000, seed=1)
    assert eq[0]["flag"] == "unbracketed"
    _, eq = reserve_sweep(Uniform(0, 1), 2, 0.4, [0.0], [1.5, 2.0], auctions=20_000, seed=1)
    assert eq[0]["flag"] == "no-feasible-multiplier"


@pytest.mark.parametrize("value,ptb", [
    (Exponential(1.0), DerivedPriceToBeat(Exponential(1.0), 2, 1.5)),
    (Uniform(0.5, 2.0), DerivedPriceToBeat(Power(0.7), 3, 2.0, 0.1)),
    (LogNormal(0.0, 0.4), Power(2.0)),
])
def test_cost_matches_double_integral(value, ptb):
    from scipy import integrate
    alpha = 1.3
    hi = value.upper_truncated()
    want, _ = integrate.dblquad(lambda b, v: b * float(ptb.pdf(b)) * float(value.pdf(v)),
                                value.lower, hi, lambda v: ptb.lower,
                                lambda v: max(ptb.lower, min(alpha * v, ptb.upper_truncated())),
                                epsabs=1e-11, epsrel=1e-9)
    _, cost = value_and_cost(CpaProblem(value, ptb, 1.0), alpha)
    assert cost == pytest.approx(want, rel=1e-6, abs=1e-10)
