"""Seeded Monte Carlo engine for repeated one-shot auctions.

Each auction draws one value per bidder, maps it through the bidder's affine
strategy and allocates to the highest bid that clears the reserve.  A bid of
exactly zero never wins (the price to beat must be strictly below the bid).
Ties go to the lowest bidder index.  The winner pays
``PaymentRule.payment(bid, max(second-highest bid, reserve))``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .auction import SECOND_PRICE, BidStrategy, PaymentRule
from .distributions import Uniform, ValueDistribution
from .errors import ConfigError
from .montecarlo import BLOCK_SIZE, mean_with_se, ratio_with_se, reduce_sums, run_blocks


@dataclass(frozen=True)
class BidderSpec:
    value_dist: ValueDistribution
    target_cpa: float
    strategy: BidStrategy

    def __post_init__(self):
        if not (math.isfinite(self.target_cpa) and self.target_cpa > 0):
            raise ConfigError(f"target_cpa must be > 0, got {self.target_cpa}", key="target_cpa")


@dataclass(frozen=True)
class MarketConfig:
    bidders: tuple
    rule: PaymentRule = SECOND_PRICE
    auctions: int = 10**6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bidders", tuple(self.bidders))
        if not self.bidders:
            raise ConfigError("market needs at least one bidder", key="bidders")
        if int(self.auctions) != self.auctions or self.auctions < 1:
            raise ConfigError(f"auctions must be an integer >= 1, got {self.auctions}", key="auctions")
        object.__setattr__(self, "auctions", int(self.auctions))

    @property
    def n(self) -> int:
        return len(self.bidders)

    def with_strategy(self, index: int, strategy: BidStrategy) -> "MarketConfig":
        bidders = list(self.bidders)
        bidders[index] = replace(bidders[index], strategy=strategy)
        return replace(self, bidders=tuple(bidders))


def symmetric_market(dist, n, target_cpa, strategy, rule=SECOND_PRICE, auctions=10**6, seed=0):
    bidder = BidderSpec(dist, target_cpa, strategy)
    return MarketConfig((bidder,) * n, rule, auctions, seed)


@dataclass
class BidderReport:
    wins: int
    value_won: float
    cost: float
    empirical_cpa: float
    cpa_std_error: float
    value_per_auction: float
    value_std_error: float
    cost_per_auction: float
    cost_std_error: float
    profit_in_value: float
    profit_std_error: float
    target_cpa: float

    @property
    def feasible(self) -> bool:
        return self.empirical_cpa <= self.target_cpa


@dataclass
class SimReport:
    auctions: int
    seed: int
    bidders: list = field(default_factory=list)
    sold: int = 0
    seller_revenue: float = 0.0
    revenue_per_auction: float = 0.0
    revenue_std_error: float = 0.0
    welfare: float = 0.0
    welfare_per_auction: float = 0.0
    welfare_std_error: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def clear_auctions(values, bids, rule: PaymentRule):
    """Allocate and price a batch of auctions.

    ``values`` and ``bids`` have shape (auctions, bidders).  Returns the winner
    index per auction (-1 when unsold) and the payment (0 when unsold).
    """
    bids = np.asarray(bids, dtype=float)
    eligible = (bids >= rule.reserve) & (bids > 0.0)
    masked = np.where(eligible, bids, -np.inf)
    winner = np.argmax(masked, axis=1)
    rows = np.arange(bids.shape[0])
    top = masked[rows, winner]
    sold = np.isfinite(top)
    others = np.where(eligible, bids, 0.0)
    others[rows, winner] = 0.0
    second = others.max(axis=1) if bids.shape[1] > 1 else np.zeros(bids.shape[0])
    payment = np.where(sold, rule.payment(np.where(sold, top, 0.0), second), 0.0)
    return np.where(sold, winner, -1), payment


def _draw(config: MarketConfig, rng, size):
    values = np.empty((size, config.n))
    for j, bidder in enumerate(config.bidders):
        values[:, j] = bidder.value_dist.sample(rng, size)
    bids = np.empty_like(values)
    for j, bidder in enumerate(config.bidders):
        bids[:, j] = bidder.strategy.bid(values[:, j])
    return values, bids


# per bidder: wins, value, value^2, cost, cost^2, value*cost
_PER_BIDDER = 6


def _kernel(config: MarketConfig):
    n = config.n

    def kernel(rng, size):
        values, bids = _draw(config, rng, size)
        winner, payment = clear_auctions(values, bids, config.rule)
        out = np.empty(n * _PER_BIDDER + 5)
        welfare = np.zeros(size)
        for j in range(n):
            won = winner == j
            val = np.where(won, values[:, j], 0.0)
            cost = np.where(won, payment, 0.0)
            welfare += val
            out[j * _PER_BIDDER:(j + 1) * _PER_BIDDER] = (
                won.sum(), val.sum(), (val * val).sum(), cost.sum(), (cost * cost).sum(),
                (val * cost).sum())
        base = n * _PER_BIDDER
        out[base:] = ((winner >= 0).sum(), payment.sum(), (payment * payment).sum(),
                      welfare.sum(), (welfare * welfare).sum())
        return out

    return kernel


def run(config: MarketConfig, workers=None, block_size=BLOCK_SIZE, blocks=None) -> SimReport:
    """Simulate ``config.auctions`` independent auctions.

    Bit-identical for a fixed seed whatever ``workers`` is.  When ``blocks``
    is a list, one row of per-block totals is appended to it per block.
    """
    parts = run_blocks(_kernel(config), config.auctions, config.seed, workers, block_size)
    if blocks is not None:
        blocks.extend(_block_rows(config, parts))
    sums = reduce_sums(parts)
    N = config.auctions
    report = SimReport(auctions=N, seed=config.seed)
    costs, values = [], []
    for j, bidder in enumerate(config.bidders):
        wins, val, val2, cost, cost2, cross = sums[j * _PER_BIDDER:(j + 1) * _PER_BIDDER]
        if val > 0:
            cpa, cpa_se = ratio_with_se(cost, val, cost2, val2, cross, N)
        else:
            cpa, cpa_se = 0.0, 0.0
        v_mean, v_se = mean_with_se(val, val2, N)
        c_mean, c_se = mean_with_se(cost, cost2, N)
        p_mean, p_se = mean_with_se(val - cost, val2 - 2.0 * cross + cost2, N)
        report.bidders.append(BidderReport(
            int(wins), float(val), float(cost), float(cpa), float(cpa_se),
            v_mean, v_se, c_mean, c_se, p_mean, p_se, bidder.target_cpa))
        costs.append(float(cost))
        values.append(float(val))
    sold, _, pay2, _, welfare2 = sums[config.n * _PER_BIDDER:]
    report.sold = int(sold)
    # accounting identities hold by construction; fsum keeps them order-free
    report.seller_revenue = math.fsum(costs)
    report.welfare = math.fsum(values)
    report.revenue_per_auction, report.revenue_std_error = mean_with_se(report.seller_revenue, pay2, N)
    report.welfare_per_auction, report.welfare_std_error = mean_with_se(report.welfare, welfare2, N)
    return report


def _block_rows(config, parts):
    rows = []
    base = config.n * _PER_BIDDER
    for i, part in enumerate(parts):
        row = {"block": i, "sold": int(part[base]), "revenue": float(part[base + 1]),
               "welfare": float(part[base + 3])}
        for j in range(config.n):
            off = j * _PER_BIDDER
            row[f"wins_{j}"] = int(part[off])
            row[f"value_{j}"] = float(part[off + 1])
            row[f"cost_{j}"] = float(part[off + 3])
        rows.append(row)
    return rows


def auction_log(config: MarketConfig, block_size=BLOCK_SIZE) -> dict:
    """Per-auction arrays (values, bids, winner, payment) for small runs.

    Uses the same streams as :func:`run`, so the log reproduces its totals.
    """
    out = {"values": [], "bids": [], "winner": [], "payment": []}

    def kernel(rng, size):
        values, bids = _draw(config, rng, size)
        winner, payment = clear_auctions(values, bids, config.rule)
        for key, arr in zip(out, (values, bids, winner, payment)):
            out[key].append(arr)
        return [0.0]

    run_blocks(kernel, config.auctions, config.seed, workers=1, block_size=block_size)
    return {k: np.concatenate(v) for k, v in out.items()}


def deviation_scan(config: MarketConfig, bidder_index: int, multipliers, workers=None):
    """Scan linear deviations of one bidder with the others held fixed.

    Every grid point reuses ``config.seed`` (common random numbers), so
    differences between rows are not blurred by independent noise.
    """
    if not 0 <= bidder_index < config.n:
        raise ConfigError(f"bidder_index {bidder_index} out of range", key="bidder_index")
    multipliers = list(multipliers)
    if not multipliers:
        raise ConfigError("multiplier grid is empty", key="multipliers")
    target = config.bidders[bidder_index].target_cpa
    rows = []
    for m in multipliers:
        rep = run(config.with_strategy(bidder_index, BidStrategy(float(m))), workers)
        b = rep.bidders[bidder_index]
        rows.append({"multiplier": float(m), "wins": b.wins, "empirical_cpa": b.empirical_cpa,
                     "cpa_std_error": b.cpa_std_error, "value": b.value_per_auction,
                     "value_std_error": b.value_std_error, "cost": b.cost_per_auction,
                     "feasible": b.empirical_cpa <= target})
    return rows


def check_asymmetric_equilibrium(dist=None, target_cpa=1.0, multipliers=(0.0, 6.0),
                                 deviation_grid=None, auctions=10**6, seed=0, workers=None):
    """Verify that (alpha_1, alpha_2) = multipliers is an asymmetric equilibrium.

    Bidder 1 deviates over ``deviation_grid`` against bidder 2 held at
    ``multipliers[1]``.  Each row reports bidder 1's wins, CPA and value and
    whether its constraint holds; ``baseline`` reports bidder 2 at the
    profile itself.
    """
    dist = dist or Uniform(2.0, 3.0)
    if deviation_grid is None:
        deviation_grid = np.round(np.arange(0.0, 8.0 + 1e-9, 0.5), 10)
    config = symmetric_market(dist, 2, target_cpa, BidStrategy(multipliers[0]),
                              auctions=auctions, seed=seed)
    config = config.with_strategy(1, BidStrategy(multipliers[1]))
    rows = []
    for m in deviation_grid:
        rep = run(config.with_strategy(0, BidStrategy(float(m))), workers)
        b1, b2 = rep.bidders
        rows.append({"alpha1": float(m), "wins1": b1.wins, "cpa1": b1.empirical_cpa,
                     "value1": b1.value_per_auction, "feasible1": b1.feasible,
                     "cpa2": b2.empirical_cpa, "feasible2": b2.feasible})
    base = run(config, workers)
    b1, b2 = base.bidders
    baseline = {"alpha1": float(multipliers[0]), "alpha2": float(multipliers[1]),
                "wins1": b1.wins, "cpa2": b2.empirical_cpa, "value2": b2.value_per_auction,
                "feasible2": b2.feasible}
    # profitable deviation: feasible and strictly more value than at the profile
    improving = [r for r in rows if r["feasible1"] and r["value1"] > b1.value_per_auction]
    return {"rows": rows, "baseline": baseline, "is_equilibrium": baseline["feasible2"] and not improving}
