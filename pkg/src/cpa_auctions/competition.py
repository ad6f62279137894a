"""Competition factor gamma(F, n).

The symmetric equilibrium bid of the CPA-constrained second-price auction is
``(T / gamma) * v``.  ``gamma`` equals the expected cost per unit of value won
by a truthful bidder facing ``n - 1`` truthful opponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Power, Uniform, ValueDistribution, expected_max
from .errors import CpaAuctionError, DegenerateEstimateError, UnsupportedCaseError
from .montecarlo import BLOCK_SIZE, ratio_with_se, reduce_sums, run_blocks

METHODS = ("closed-form", "quadrature", "monte-carlo")


@dataclass(frozen=True)
class CompetitionFactorResult:
    gamma: float
    method: str
    n: int
    std_error: float = 0.0
    samples: int = 0


def _check_n(n):
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")


def gamma_power_closed_form(a: float, n: int) -> float:
    """gamma for F(v) = v**a on [0, 1]: (n-1) * ((a n + 1) / (a (n-1) + 1) - 1)."""
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    _check_n(n)
    return (n - 1) * ((a * n + 1.0) / (a * (n - 1) + 1.0) - 1.0)


def gamma_order_stat(dist: ValueDistribution, n: int) -> float:
    """gamma from expected maxima: n * (E Y(n-1) / E Y(n) - (n-1)/n)."""
    _check_n(n)
    top_prev = expected_max(dist, n - 1)
    top = expected_max(dist, n)
    return n * top_prev / top - (n - 1)


def _gamma_kernel(dist, n):
    def kernel(rng, size):
        v = dist.sample(rng, size)
        rivals = dist.sample(rng, size * (n - 1)).reshape(size, n - 1).max(axis=1)
        win = v > rivals
        cost = np.where(win, rivals, 0.0)
        value = np.where(win, v, 0.0)
        return [cost.sum(), value.sum(), (cost * cost).sum(), (value * value).sum(),
                (cost * value).sum(), float(win.sum())]
    return kernel


def gamma_monte_carlo(dist: ValueDistribution, n: int, samples: int, seed: int = 0,
                      workers=None, block_size=BLOCK_SIZE) -> CompetitionFactorResult:
    """Estimate gamma as accumulated cost over accumulated value on wins.

    Each sample draws the bidder's value ``v`` and the price to beat as the max
    of ``n - 1`` opponent values; a win (strict ``v > price``) adds the price
    to Cost and ``v`` to Value.
    """
    _check_n(n)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    parts = run_blocks(_gamma_kernel(dist, n), samples, seed, workers, block_size)
    s_cost, s_val, s_cost2, s_val2, s_cross, wins = reduce_sums(parts)
    if wins == 0:
        raise DegenerateEstimateError(
            f"no winning samples out of {samples}: gamma undefined for {dist}, n={n}")
    gamma, se = ratio_with_se(s_cost, s_val, s_cost2, s_val2, s_cross, samples)
    return CompetitionFactorResult(gamma, "monte-carlo", int(n), se, int(samples))


def _power_exponent(dist):
    if isinstance(dist, Power):
        return dist.a
    if isinstance(dist, Uniform) and dist.lo == 0.0:
        return 1.0
    return None


def competition_factor(dist: ValueDistribution, n: int, method: str = "quadrature",
                       samples: int = 10**6, seed: int = 0, workers=None) -> CompetitionFactorResult:
    """Dispatch on ``method``; closed-form is only defined for the power family."""
    if method == "closed-form":
        a = _power_exponent(dist)
        if a is None:
            raise UnsupportedCaseError(f"no closed-form gamma for {dist.family}; use quadrature")
        return CompetitionFactorResult(gamma_power_closed_form(a, n), method, int(n))
    if method == "quadrature":
        return CompetitionFactorResult(gamma_order_stat(dist, n), method, int(n))
    if method == "monte-carlo":
        return gamma_monte_carlo(dist, n, samples, seed, workers)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def gamma_sweep(dists, n_values, samples=0, seed=0, method=None, workers=None):
    """Table of gamma over distributions x bidder counts.

    Rows are dicts with keys family, param, n, method, gamma, std_error, error.
    ``method`` defaults to monte-carlo when ``samples > 0``, else quadrature.
    A failing member fills ``error`` and the sweep continues.
    """
    dists = list(dists)
    n_values = list(n_values)
    if not dists or not n_values:
        raise ValueError("gamma_sweep needs at least one distribution and one n")
    method = method or ("monte-carlo" if samples > 0 else "quadrature")
    rows = []
    for i, dist in enumerate(dists):
        for j, n in enumerate(n_values):
            row = {"family": dist.family, "param": dist.describe(), "n": int(n), "method": method,
                   "gamma": math.nan, "std_error": math.nan, "error": ""}
            try:
                # distinct stream family per row keeps rows independent
                res = competition_factor(dist, n, method, samples, seed=seed * 1_000_003 + i * 1009 + j,
                                         workers=workers)
            except (ArithmeticError, ValueError, CpaAuctionError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            else:
                row["gamma"] = res.gamma
                row["std_error"] = res.std_error
            rows.append(row)
    return rows
