import math

import pytest

from cpa_auctions.competition import (competition_factor, gamma_monte_carlo, gamma_order_stat,
                                      gamma_power_closed_form, gamma_sweep)
from cpa_auctions.distributions import Exponential, LogNormal, Power, Uniform
from cpa_auctions.errors import ConfigError, DegenerateEstimateError, UnsupportedCaseError


def test_closed_form_examples():
    assert gamma_power_closed_form(1, 2) == 0.5
    assert gamma_power_closed_form(2, 2) == pytest.approx(2 / 3, abs=1e-15)
    assert gamma_power_closed_form(1, 1000) == pytest.approx(0.999, abs=1e-12)


def test_gamma_is_one_for_a_single_bidder_limit():
    # n = 1 is degenerate: the closed form gives 0 and there is no competition
    with pytest.raises((ConfigError, ValueError)):
        gamma_power_closed_form(1, 0)


def test_exponential_gamma_for_two_bidders():
    # E max of 1 and 2 draws are 1 and 3/2: gamma = 2 * 1 / (3/2) - 1
    assert gamma_order_stat(Exponential(1.0), 2) == pytest.approx(1 / 3, abs=1e-12)
    assert gamma_order_stat(Exponential(7.0), 4) == pytest.approx(gamma_order_stat(Exponential(1.0), 4),
                                                                   abs=1e-12)


def test_uniform_scale_family_uses_power_one():
    res = competition_factor(Uniform(0, 3), 4, method="closed-form")
    assert res.gamma == gamma_power_closed_form(1, 4)
    with pytest.raises(UnsupportedCaseError):
        competition_factor(Uniform(1, 2), 4, method="closed-form")


def test_gamma_in_unit_interval():
    for d in (Uniform(2, 3), LogNormal(0, 1), Power(0.3)):
        for n in (2, 5, 20):
            assert 0 < gamma_order_stat(d, n) <= 1


def test_monte_carlo_worker_invariance():
    a = gamma_monte_carlo(Power(2.0), 3, 300_000, seed=4, workers=1, block_size=1 << 15)
    b = gamma_monte_carlo(Power(2.0), 3, 300_000, seed=4, workers=3, block_size=1 << 15)
    assert a == b
    assert abs(a.gamma - gamma_power_closed_form(2.0, 3)) <= 4 * a.std_error


def test_monte_carlo_degenerate():
    with pytest.raises(DegenerateEstimateError):
        gamma_monte_carlo(Uniform(0, 1), 200, 1, seed=0)


def test_sweep_keeps_going_on_errors():
    rows = gamma_sweep([Power(1.0), Exponential(1.0)], [2, 3], method="closed-form")
    assert len(rows) == 4
    assert [r["error"] == "" for r in rows] == [True, True, False, False]
    assert all(math.isnan(r["gamma"]) for r in rows[2:])


def test_sweep_power_monotone_in_n():
    rows = gamma_sweep([Power(a) for a in (0.5, 1.0, 2.0)], range(2, 11))
    assert len(rows) == 27
    for a_rows in (rows[i:i + 9] for i in range(0, 27, 9)):
        g = [r["gamma"] for r in a_rows]
        assert all(0 < x < 1 for x in g)
        assert g == sorted(g)


def test_power_gamma_monotone_in_a_and_n():
    a_grid = (0.25, 0.5, 1, 2, 4, 8)
    n_grid = (2, 3, 4, 8, 16, 32, 64)
    table = [[gamma_power_closed_form(a, n) for n in n_grid] for a in a_grid]
    for row in table:
        assert row == sorted(row)
    for col in zip(*table):
        assert list(col) == sorted(col)
