"""Static best replies and symmetric equilibria under a CPA constraint.

A bidder with target CPA ``T`` maximizes expected value won subject to
``E[cost] <= T * E[value won]``.  Against any bounded price to beat the best
reply is linear, ``alpha * v``, with ``alpha`` the largest multiplier whose
CPA does not exceed ``T`` (CPA is nondecreasing in ``alpha``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .auction import SECOND_PRICE, BidStrategy, PaymentRule
from .competition import _power_exponent, gamma_order_stat
from .distributions import (DerivedPriceToBeat, PointMass, ValueDistribution,
                            expected_max, quad)
from .errors import ConfigError, SolverError, UnsupportedCaseError

CPA_TOL = 1e-6
MAX_ITER = 200
# winning probability at which the cap is computed: v below this quantile may lose
CAP_VALUE_QUANTILE = 1e-6


class ZeroWinProbability(UserWarning):
    """The multiplier never wins; CPA is reported as 0 (no cost, no value)."""


@dataclass(frozen=True)
class CpaProblem:
    value_dist: ValueDistribution
    price_to_beat: object  # ValueDistribution or DerivedPriceToBeat
    target_cpa: float

    def __post_init__(self):
        if not (math.isfinite(self.target_cpa) and self.target_cpa > 0):
            raise ConfigError(f"target_cpa must be > 0, got {self.target_cpa}", key="T")


@dataclass(frozen=True)
class BestReplyResult:
    alpha_star: float
    lagrange_lambda: float
    binding: bool
    achieved_cpa: float
    alpha_cap: float
    evaluations: int = 0

    @property
    def strategy(self) -> BidStrategy:
        return BidStrategy(self.alpha_star)


def value_and_cost(problem: CpaProblem, alpha: float) -> tuple[float, float]:
    """(E[v 1{b- < alpha v}], E[b- 1{b- < alpha v}]) by quadrature."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    F, B = problem.value_dist, problem.price_to_beat
    if alpha == 0:
        return 0.0, 0.0
    if isinstance(F, PointMass):
        x = alpha * F.value
        return F.value * float(B.prob_below(x)), B.partial_expectation(x)
    lo, hi = F.lower, F.upper_truncated()
    kinks = [B.lower / alpha, B.upper_truncated() / alpha]
    value = quad(lambda v: v * float(B.prob_below(alpha * v)) * float(F.pdf(v)),
                 lo, hi, points=kinks, what="expected value won")
    if getattr(B, "has_density", getattr(B, "continuous", False)):
        # swap the order: E[b- P(alpha v > b-)] is one integral over b-
        b_lo, b_hi = B.lower, B.upper_truncated()
        cost = quad(lambda b: b * float(B.pdf(b)) * (1.0 - float(F.cdf(b / alpha))),
                    b_lo, b_hi, points=[alpha * lo, alpha * hi], what="expected cost")
    else:
        cost = quad(lambda v: B.partial_expectation(alpha * v) * float(F.pdf(v)),
                    lo, hi, points=kinks, what="expected cost")
    return value, cost


def cpa_of_multiplier(problem: CpaProblem, alpha: float) -> float:
    """Expected cost over expected value for the bid ``alpha * v``.

    Returns 0.0 and emits :class:`ZeroWinProbability` when nothing is won.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    value, cost = value_and_cost(problem, alpha)
    if value <= 0.0:
        warnings.warn(ZeroWinProbability(f"alpha={alpha:g} never wins"), stacklevel=2)
        return 0.0
    return cost / value


def default_alpha_cap(problem: CpaProblem) -> float:
    """Twice the smallest multiplier that beats the whole price-to-beat support."""
    F, B = problem.value_dist, problem.price_to_beat
    v_low = float(F.ppf(CAP_VALUE_QUANTILE)) if F.continuous else F.lower
    b_high = B.upper_truncated()
    win_all = b_high / v_low if v_low > 0 else math.inf
    if not math.isfinite(win_all):
        raise SolverError("cannot derive a finite multiplier cap: value support reaches 0 "
                          "with probability mass; pass alpha_cap explicitly")
    return 2.0 * max(win_all, problem.target_cpa)


def best_reply(problem: CpaProblem, alpha_cap=None, tol=CPA_TOL, max_iter=MAX_ITER) -> BestReplyResult:
    """Largest admissible multiplier by log-scale bisection on [T, cap].

    When the CPA is flat at ``T`` over a range (value saturates), the smallest
    multiplier reaching the saturated value is returned instead.
    """
    T = problem.target_cpa
    cap = float(alpha_cap) if alpha_cap is not None else default_alpha_cap(problem)
    if cap < T:
        raise ConfigError(f"alpha_cap {cap} below target CPA {T}", key="alpha_cap")
    evals = []

    def gap(alpha):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroWinProbability)
            c = cpa_of_multiplier(problem, alpha)
        for a_prev, c_prev in evals:
            if (a_prev < alpha and c_prev > c + 1e-9) or (a_prev > alpha and c_prev < c - 1e-9):
                raise SolverError(f"CPA not monotone in alpha: cpa({a_prev:.6g})={c_prev:.9g}, "
                                  f"cpa({alpha:.6g})={c:.9g}")
        evals.append((alpha, c))
        return c - T

    g_cap = gap(cap)
    if g_cap < -tol:
        return BestReplyResult(cap, 0.0, False, g_cap + T, cap, len(evals))
    if g_cap <= tol:
        alpha_hi = cap
    else:
        lo, hi = T, cap
        g_lo = gap(lo)
        if g_lo > tol:
            raise SolverError(f"CPA at alpha=T exceeds T by {g_lo:.3g}; bracket invalid")
        for _ in range(max_iter):
            mid = math.sqrt(lo * hi)
            g = gap(mid)
            if g <= 0:
                lo, g_lo = mid, g
            else:
                hi = mid
            if hi / lo - 1.0 < 1e-12:
                break
        if abs(g_lo) > tol:
            raise SolverError(f"bisection ended with CPA gap {g_lo:.3g} > tol {tol:g}")
        alpha_hi = lo
    alpha_star = _smallest_saturating(problem, T, alpha_hi, max_iter)
    achieved = gap(alpha_star) + T
    lam = math.inf if alpha_star <= T else 1.0 / (alpha_star - T)
    return BestReplyResult(alpha_star, lam, True, achieved, cap, len(evals))


def _smallest_saturating(problem, lo, alpha_hi, max_iter):
    """Shrink ``alpha_hi`` to the smallest multiplier with the same expected value."""
    v_hi, _ = value_and_cost(problem, alpha_hi)
    v_probe, _ = value_and_cost(problem, alpha_hi * (1.0 - 1e-6))
    if v_hi - v_probe > 1e-12 * max(v_hi, 1e-300):
        return alpha_hi
    hi = alpha_hi
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        v_mid, _ = value_and_cost(problem, mid)
        if v_hi - v_mid <= 1e-12 * v_hi:
            hi = mid
        else:
            lo = mid
        if hi / lo - 1.0 < 1e-12:
            break
    return hi


# -- symmetric equilibria ----------------------------------------------------

def competition_gamma(dist: ValueDistribution, n: int) -> float:
    return gamma_order_stat(dist, n)


def standard_equilibrium_slope(dist: ValueDistribution, n: int, kappa: float) -> float:
    """Slope of the unconstrained symmetric equilibrium bid for the kappa-mix.

    Second price bids truthfully for any law.  Otherwise the bid is linear only
    for the power family (uniform on [0, hi] included); revenue equivalence
    then fixes the slope at gamma / ((1 - kappa) + kappa * gamma).
    """
    if kappa == 1.0:
        return 1.0
    if _power_exponent(dist) is None:
        raise UnsupportedCaseError(
            f"no linear standard-auction equilibrium implemented for kappa={kappa:g} "
            f"with {dist.family} values")
    g = gamma_order_stat(dist, n)
    return g / ((1.0 - kappa) + kappa * g)


def first_price_standard_bid(dist: ValueDistribution, n: int, v: float) -> float:
    """E[Y | Y < v] for Y the max of n-1 values: classic first-price bid, by quadrature."""
    k = n - 1
    lo = dist.lower
    if v <= lo:
        return lo
    mass = float(dist.cdf(v)) ** k
    num = quad(lambda y: y * k * float(dist.cdf(y)) ** (k - 1) * float(dist.pdf(y)), lo, v,
               what="first-price bid")
    return num / mass


def symmetric_equilibrium(dist: ValueDistribution, n: int, target_cpa: float,
                          rule: PaymentRule = SECOND_PRICE) -> BidStrategy:
    """Linear symmetric equilibrium ``(T / gamma) * bhat(v)``."""
    if int(n) != n or n < 2:
        raise ConfigError(f"n must be an integer >= 2, got {n}", key="n")
    if rule.reserve != 0.0:
        raise UnsupportedCaseError("symmetric equilibrium is only derived for reserve 0")
    if not target_cpa > 0:
        raise ConfigError("target_cpa must be > 0", key="T")
    g = gamma_order_stat(dist, n)
    return BidStrategy(target_cpa / g * standard_equilibrium_slope(dist, n, rule.kappa))


def equilibrium_problem(dist: ValueDistribution, n: int, target_cpa: float,
                        opponents: BidStrategy) -> CpaProblem:
    """Best-reply problem of one bidder facing ``n - 1`` opponents playing ``opponents``."""
    ptb = DerivedPriceToBeat(dist, n - 1, opponents.slope, opponents.intercept)
    return CpaProblem(dist, ptb, target_cpa)


def expected_seller_revenue_at_equilibrium(dist: ValueDistribution, n: int, target_cpa: float) -> float:
    """T * E[max of n values]: the binding constraint makes payments T x value."""
    if target_cpa < 0:
        raise ConfigError("target_cpa must be >= 0", key="T")
    if target_cpa == 0:
        return 0.0
    return target_cpa * expected_max(dist, n)


# -- reserve price -----------------------------------------------------------

def reserve_sweep(dist, n, target_cpa, reserves, multipliers, auctions=10**6, seed=0,
                  kappa=1.0, workers=None):
    """Per-buyer payment and value over a (reserve, symmetric multiplier) grid.

    Returns ``(grid_rows, equilibrium_rows)``.  For each reserve the
    equilibrium multiplier is where per-buyer payment crosses ``T x value``,
    linearly interpolated between the last feasible grid point and the next;
    ``flag`` is set when the grid does not bracket that crossing.  All grid
    points share one seed (common random numbers).
    """
    from .simulator import run, symmetric_market

    reserves = [float(r) for r in reserves]
    multipliers = sorted(float(m) for m in multipliers)
    if not reserves or not multipliers:
        raise ConfigError("reserve_sweep needs nonempty reserve and multiplier grids",
                          key="reserves" if not reserves else "multipliers")
    grid, eq_rows = [], []
    for r in reserves:
        rule = PaymentRule(kappa, r)
        rows = []
        for m in multipliers:
            rep = run(symmetric_market(dist, n, target_cpa, BidStrategy(m), rule, auctions, seed), workers)
            pay = rep.revenue_per_auction / n
            val = rep.welfare_per_auction / n
            row = {"reserve": r, "multiplier": m, "payment": pay,
                   "payment_std_error": rep.revenue_std_error / n, "value": val,
                   "value_std_error": rep.welfare_std_error / n, "value_minus_payment": val - pay,
                   "cpa": pay / val if val > 0 else 0.0,
                   "seller_revenue": rep.revenue_per_auction,
                   "seller_revenue_std_error": rep.revenue_std_error}
            rows.append(row)
        grid.extend(rows)
        eq_rows.append(_equilibrium_point(rows, target_cpa, r))
    return grid, eq_rows


def _equilibrium_point(rows, T, reserve):
    gaps = [row["payment"] - T * row["value"] for row in rows]
    feasible = [i for i, g in enumerate(gaps) if g <= 0]
    out = {"reserve": reserve, "multiplier": math.nan, "seller_revenue": math.nan,
           "seller_revenue_std_error": math.nan, "flag": ""}
    if not feasible:
        out["flag"] = "no-feasible-multiplier"
        return out
    i = feasible[-1]
    if i == len(rows) - 1:
        out.update(multiplier=rows[i]["multiplier"], seller_revenue=rows[i]["seller_revenue"],
                   seller_revenue_std_error=rows[i]["seller_revenue_std_error"],
                   flag="unbracketed")
        return out
    a, b = rows[i], rows[i + 1]
    w = gaps[i] / (gaps[i] - gaps[i + 1])  # in [0, 1)
    lerp = lambda key: (1 - w) * a[key] + w * b[key]
    out.update(multiplier=lerp("multiplier"), seller_revenue=lerp("seller_revenue"),
               seller_revenue_std_error=max(a["seller_revenue_std_error"], b["seller_revenue_std_error"]))
    return out
