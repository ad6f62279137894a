import math

import numpy as np
import pytest

from cpa_auctions.errors import CFLError, ConfigError
from cpa_auctions.hjb import (HjbConfig, deterministic_plan, min_stable_t_steps, rates,
                              simulate_trajectory, solve)


def test_rates_continuous_at_one():
    for a in (0.5, 1.0, 2.0, 5.0):
        below = rates(a, np.nextafter(1.0, 0.0))
        at = rates(a, 1.0)
        above = rates(a, np.nextafter(1.0, 2.0))
        assert abs(below[0] - at[0]) < 1e-12 and abs(above[0] - at[0]) < 1e-12
        assert abs(below[1] - at[1]) < 1e-12 and abs(above[1] - at[1]) < 1e-12


def test_rates_limits():
    R, C = rates(1.0, 1e9)
    assert R == pytest.approx(0.5, abs=1e-8)          # E v
    assert C == pytest.approx(0.5, abs=1e-8)          # E b- with b- ~ U(0,1)
    assert rates(2.0, 0.0) == (0.0, 0.0)


def test_rates_cpa_nondecreasing():
    alpha = np.linspace(0.01, 5, 500)
    R, C = rates(1.5, alpha)
    assert np.all(np.diff(C / R) >= -1e-14)


def test_rates_validation():
    with pytest.raises(ValueError):
        rates(0.0, 1.0)
    with pytest.raises(ValueError):
        rates(1.0, -0.1)


def test_deterministic_plan_root():
    # 0.6 alpha^2 - 2 alpha + 0.8 = 0 for a = 1, T = 0.8, x0 = 0
    plan = deterministic_plan(HjbConfig(), 0.0)
    assert plan.alpha == pytest.approx((2 + math.sqrt(2.08)) / 1.2, rel=1e-12)
    assert plan.feasible
    assert deterministic_plan(HjbConfig(tau=0.0), 0.0).alpha is None


def test_deterministic_plan_slack_and_infeasible():
    assert deterministic_plan(HjbConfig(), 5.0).alpha == 5.0
    plan = deterministic_plan(HjbConfig(), -5.0)
    assert plan.alpha == pytest.approx(0.8) and not plan.feasible


def test_cfl_rejected_with_suggestion():
    cfg = HjbConfig(t_steps=100)
    with pytest.raises(CFLError) as err:
        solve(cfg)
    assert err.value.suggested_t_steps == min_stable_t_steps(cfg)


def test_config_validation():
    with pytest.raises(ConfigError) as err:
        HjbConfig(x_min=0.5)
    assert err.value.key == "x_max"


def test_terminal_and_value_shape():
    cfg = HjbConfig(x_steps=100, t_steps=400, tau=0.5)
    sol = solve(cfg)
    assert sol.value.shape == (401, 101)
    assert np.array_equal(sol.value[-1], cfg.terminal(sol.x))
    assert np.all(np.diff(sol.value, axis=1) >= -1e-12)


def test_value_matches_simulated_objective():
    # E[int R dt - penalty] under the HJB policy estimates V(0, x0)
    cfg = HjbConfig(x_steps=200, t_steps=1000)
    sol = solve(cfg)
    recs = simulate_trajectory(sol, cfg, x0=0.1, seed=3, n_paths=2000)
    payoff = np.array([r.value[-1] - r.terminal_penalty for r in recs])
    se = payoff.std(ddof=1) / math.sqrt(payoff.size)
    assert abs(payoff.mean() - sol.value_at(0, 0.1)) <= 4 * se + 0.01


def test_paths_share_noise():
    cfg = HjbConfig(x_steps=100, t_steps=400)
    a = simulate_trajectory(1.0, cfg, seed=7, n_paths=3)
    b = simulate_trajectory(1.0, cfg, seed=7, n_paths=3)
    assert all(np.array_equal(p.x, q.x) for p, q in zip(a, b))
    quiet = simulate_trajectory(1.0, HjbConfig(x_steps=100, t_steps=400, noise_on=False), n_paths=1)[0]
    R, C = rates(1.0, 1.0)
    assert quiet.x[-1] == pytest.approx(0.8 * R - C, rel=1e-9)


def test_policy_near_horizon_monotone_on_feasible_side():
    # close to tau the control backs off as slack shrinks; checked for x >= 0
    cfg = HjbConfig()
    sol = solve(cfg)
    keep = sol.x >= 0
    for k in range(cfg.t_steps - 200, cfg.t_steps):
        assert np.all(np.diff(sol.policy[k][keep]) >= 0)


def test_deterministic_plan_against_fine_scan():
    # independent oracle: largest alpha on a fine grid with nonnegative slack rate
    alpha = np.linspace(1.0, 5.0, 4_000_001)
    R, C = rates(1.0, alpha)
    feasible = alpha[0.8 * R - C >= 0]
    assert deterministic_plan(HjbConfig(), 0.0).alpha == pytest.approx(feasible.max(), abs=2e-6)
    assert 2.86 < feasible.max() < 2.87
